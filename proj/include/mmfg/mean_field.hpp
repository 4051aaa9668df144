#pragma once

#include "mmfg/scenario.hpp"
#include "mmfg/types.hpp"

namespace mmfg {

inline constexpr double kSupportEps = 1e-12;  // below this a node counts as unreached

/// Transition probabilities from node (t, u) to each child under the mixed
/// action alpha_row (weights as stored in MajorPolicy), with the mean-field
/// features already evaluated. Order matches space.children[t][u].
Vec lifted_major_row(const Scenario& s, const PathSpace& space, int t, int node,
                     const Vec& alpha_row, const Vec& feats);

/// Law of the major's path node per slice: p_0 from the initial law, then
/// the kernel recursion under alpha and m.
MajorMarginal marginal_law(const Scenario& s, const PathSpace& space, const MajorPolicy& alpha,
                           const MeanFieldFlow& m);

/// Conditional flows from joint occupation measures: divide by p_t(u) where
/// p_t(u) > eps, copy the fallback elsewhere. Throws MassMismatch when the
/// joint mass at a node exceeds its marginal beyond 1e-9.
std::pair<MeanFieldFlow, MeanFieldFlow> disintegrate(const PathSpace& space,
                                                     const OccupationFlow& flow,
                                                     const MajorMarginal& p,
                                                     const MeanFieldFlow& fallback_mu,
                                                     const MeanFieldFlow& fallback_m,
                                                     double eps = kSupportEps);

/// Max over supported (t, u) of the L1 gap between the joint measure and the
/// reconstruction mu_t(u) * p_t(u), over both flavors.
double consistency_residual(const PathSpace& space, const MeanFieldFlow& mu,
                            const MeanFieldFlow& m, const OccupationFlow& flow,
                            const MajorMarginal& p, double eps = kSupportEps);

/// Max over (t, u) of the L1 distance between cells.
double flow_distance(const MeanFieldFlow& a, const MeanFieldFlow& b);

}  // namespace mmfg
