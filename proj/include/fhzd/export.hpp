#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fhzd/simulator.hpp"

namespace fhzd {

/// Trace CSV columns, in order:
///   step, phase, t,
///   q1..q4, dq1..dq4,              rad, rad/s
///   u1, ub1..ub3,                  N m (ankle, then actuated joints)
///   y1..y3, dy1..dy3,              output error and its rate
///   fn, ft, fri, fri_desired,      N, N, m, m
///   sigma_ankle, sigma_fri,        kg m^2/s
///   heel_height, toe_height,       m, swing foot ends
///   condition                      decoupling matrix condition number
const std::vector<std::string>& trace_csv_columns();

void write_trace_csv(std::ostream& os, const SimTrace& trace);

/// Samples only; events and step records are not stored in the CSV.
/// Throws Io on a malformed file.
SimTrace read_trace_csv(std::istream& is);

struct SvgOptions {
  int stride = 50;          // samples between snapshots
  double scale = 400.0;     // px per m
  double spacing = 0.45;    // m between consecutive snapshots
};

/// Stick-figure snapshot sequence, left to right, new stance leg after every
/// impact drawn in the stance colour.
std::string render_svg(const SimTrace& trace, const RobotParams& params, const SvgOptions& opts = {});

}  // namespace fhzd
