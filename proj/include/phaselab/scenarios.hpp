#pragma once

#include "phaselab/config.hpp"
#include "phaselab/connection1d.hpp"
#include "phaselab/grid_field.hpp"
#include "phaselab/minimizer.hpp"
#include "phaselab/potentials.hpp"

namespace phaselab {

/// Keys: potential (two_well | product | power | ring), wells ("-1;1"),
/// alpha, scale, anisotropy.
PotentialSpec potential_from_config(Config& c);

/// Keys: dim, shape ("n0,n1,n2"), h, domain (box | disk), radius, bc, init,
/// noise, seed. Boundary and initial descriptors:
///   well:j            the j-th well
///   value:v1,...      a fixed vector
///   halfspace:j0,j1   well j0 for x_0 < 0, j1 for x_0 > 0, their mean on x_0 = 0
///   two_arc:t1,t2,ji,jo  well ji for polar angles in (t1, t2), jo elsewhere (2-D)
/// `init` defaults to the boundary descriptor.
Field field_from_config(Config& c, const PotentialSpec& spec);

/// Fills the active nodes of f from a descriptor; throws ConfigError.
void apply_descriptor(Field& f, const std::string& descriptor, const PotentialSpec& spec, bool boundary_only);

/// Keys: descent_tol, max_iters, dt, dt_rule (adaptive | fixed), log_every.
DescentSchedule schedule_from_config(Config& c);

/// Keys: L, N, connect_dt, connect_tol, connect_iters, bias.
ConnectionOptions connection_options_from_config(Config& c);

/// Copy of e with every component but the first negated, for potentials even
/// in those components.
ConnectionProfile mirror_connection(const ConnectionProfile& e);

/// Field on [-L, L] x [-Y, Y] matching e's grid in s: Dirichlet rows y = -Y
/// and y = +Y hold lower and upper, the interior blends them by
/// (1 + tanh(y / width)) / 2, and the s-ends hold the wells.
Field cylinder_transition(const ConnectionProfile& lower, const ConnectionProfile& upper, double Y, double width);

/// Scalar box [-W, W] x [-Y, Y] with `wall` on the Dirichlet ring and `inside`
/// in the interior.
Field strip(double W, double Y, double h, double wall, double inside);

}  // namespace phaselab
