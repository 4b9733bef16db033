#pragma once

#include "upsense/mirrored_music.hpp"
#include "upsense/types.hpp"

namespace upsense {

enum class SearchAxis { Doppler, Delay };

/// Plain (non-mirrored) Hankel stacking of xi, signal rank 2L, scan over the
/// full signed range at the same grid step as the mirrored search — exactly
/// twice the candidates.
AxisEstimates conventional_music(const XiGrid& xi, SearchAxis axis, int num_targets,
                                 const ScenarioConfig& cfg, const MirrorConfig& mc,
                                 const SearchOptions& opt = {});

/// Full conventional baseline: signed Doppler/delay candidate peaks paired
/// greedily by the same combining gain as the mirrored pipeline.
Algorithm1Result conventional_estimate(const XiGrid& xi, double omega0, double tau0_s,
                                       const ScenarioConfig& cfg, const MirrorConfig& mc,
                                       int num_targets, const SearchOptions& opt = {});

/// Add-minus suppression grids: A_n = y_n - Dhat_n, B_n = y_n + Dhat_n,
/// xi_ams_n = A_n .* conj(B_0), with Dhat_n the per-(n,g) mean of y_n over m.
struct AmsGrids {
  ComplexGrid a;      // N slices
  ComplexGrid b;      // N slices
  XiGrid xi_ams;      // N-1 slices, antennas 1..N-1 against reference 0
};

AmsGrids ams_transform(const RxGrid& rx);

/// Conventional MUSIC applied to the AMS grids.
Algorithm1Result ams_estimate(const AmsGrids& ams, double tau0_s, const ScenarioConfig& cfg,
                              const MirrorConfig& mc, int num_targets,
                              const SearchOptions& opt = {});

} // namespace upsense
