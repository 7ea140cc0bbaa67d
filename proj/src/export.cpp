#include "fhzd/export.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace fhzd {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

Phase parse_phase(const std::string& s) {
  if (s == to_string(Phase::Rising)) return Phase::Rising;
  if (s == to_string(Phase::Falling)) return Phase::Falling;
  throw Error(ErrorCode::Io, "unknown phase '" + s + "' in trace");
}

}  // namespace

const std::vector<std::string>& trace_csv_columns() {
  static const std::vector<std::string> cols = {
      "step",  "phase", "t",     "q1",  "q2",  "q3",  "q4",  "dq1", "dq2",         "dq3",         "dq4",
      "u1",    "ub1",   "ub2",   "ub3", "y1",  "y2",  "y3",  "dy1", "dy2",         "dy3",         "fn",
      "ft",    "fri",   "fri_desired", "sigma_ankle", "sigma_fri", "heel_height", "toe_height", "condition"};
  return cols;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  const auto& cols = trace_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const SimSample& s : trace.samples) {
    os << s.step << ',' << to_string(s.phase) << ',' << num(s.t);
    const auto put = [&](double v) { os << ',' << num(v); };
    for (int i = 0; i < 4; ++i) put(s.x.q[i]);
    for (int i = 0; i < 4; ++i) put(s.x.dq[i]);
    put(s.u1);
    for (int i = 0; i < 3; ++i) put(s.ub[i]);
    for (int i = 0; i < 3; ++i) put(s.y[i]);
    for (int i = 0; i < 3; ++i) put(s.dy[i]);
    for (double v : {s.contact.normal, s.contact.tangential, s.contact.fri, s.fri_desired, s.sigma_ankle,
                     s.sigma_fri, s.heel_height, s.toe_height, s.condition})
      put(v);
    os << '\n';
  }
}

SimTrace read_trace_csv(std::istream& is) {
  const auto& cols = trace_csv_columns();
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::Io, "empty trace");
  {
    std::istringstream hs(line);
    std::string c;
    for (const auto& want : cols)
      if (!std::getline(hs, c, ',') || c != want) throw Error(ErrorCode::Io, "unexpected trace header");
  }
  SimTrace trace;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    if (f.size() != cols.size()) throw Error(ErrorCode::Io, "row " + std::to_string(row) + ": wrong field count");
    SimSample s;
    try {
      std::size_t k = 0;
      const auto next = [&] { return std::stod(f[k++]); };
      s.step = std::stoi(f[k++]);
      s.phase = parse_phase(f[k++]);
      s.t = next();
      for (int i = 0; i < 4; ++i) s.x.q[i] = next();
      for (int i = 0; i < 4; ++i) s.x.dq[i] = next();
      s.u1 = next();
      for (int i = 0; i < 3; ++i) s.ub[i] = next();
      for (int i = 0; i < 3; ++i) s.y[i] = next();
      for (int i = 0; i < 3; ++i) s.dy[i] = next();
      s.contact.normal = next();
      s.contact.tangential = next();
      s.contact.fri = next();
      s.fri_desired = next();
      s.sigma_ankle = next();
      s.sigma_fri = next();
      s.heel_height = next();
      s.toe_height = next();
      s.condition = next();
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Io, "row " + std::to_string(row) + ": not a number");
    }
    trace.samples.push_back(s);
  }
  return trace;
}

std::string render_svg(const SimTrace& trace, const RobotParams& params, const SvgOptions& opts) {
  if (opts.stride < 1) throw Error(ErrorCode::InvalidParams, "svg stride must be >= 1");
  const auto& smp = trace.samples;

  // Pick frames and the world position of each step's stance ankle.
  std::vector<std::size_t> frames;
  std::vector<double> origin(smp.empty() ? 0 : smp.back().step + 2, 0.0);
  for (std::size_t i = 0; i < smp.size(); ++i) {
    const bool last_of_step = i + 1 == smp.size() || smp[i + 1].step != smp[i].step;
    if (i % opts.stride == 0 || last_of_step) frames.push_back(i);
    if (last_of_step && smp[i].step + 1 < static_cast<int>(origin.size()))
      origin[smp[i].step + 1] = origin[smp[i].step] + kinematics(smp[i].x.q, params).joints[3].x();
  }

  struct Seg {
    Vec2 a, b;
    const char* cls;
  };
  std::vector<std::vector<Seg>> figs;
  double xmin = 0.0, xmax = 0.0, ymax = 0.0;
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const SimSample& s = smp[frames[n]];
    const Kinematics k = kinematics(s.x.q, params);
    const Vec2 off(origin[s.step] + n * opts.spacing, 0.0);
    std::vector<Seg> f = {
        {Vec2(params.x_heel, 0.0), Vec2(params.x_toe, 0.0), "stance"},
        {k.joints[0], k.joints[1], "stance"},
        {k.joints[1], k.joints[2], "pelvis"},
        {k.joints[2], k.joints[3], "swing"},
        {k.heel.p, k.toe.p, "swing"},
    };
    for (Seg& g : f) {
      g.a += off;
      g.b += off;
      for (const Vec2& p : {g.a, g.b}) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymax = std::max(ymax, p.y());
      }
    }
    figs.push_back(std::move(f));
  }

  const double pad = 0.05, w = (xmax - xmin + 2 * pad) * opts.scale, h = (ymax + 2 * pad) * opts.scale;
  const auto X = [&](double x) { return px((x - xmin + pad) * opts.scale); };
  const auto Y = [&](double y) { return px((ymax + pad - y) * opts.scale); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(w) << "\" height=\"" << px(h)
     << "\" viewBox=\"0 0 " << px(w) << ' ' << px(h) << "\">\n"
     << "<style>line{stroke-width:3;stroke-linecap:round}.stance{stroke:#1f4e9c}.swing{stroke:#c0392b}"
        ".pelvis{stroke:#333}.ground{stroke:#888;stroke-width:1}</style>\n"
     << "<line class=\"ground\" x1=\"0\" y1=\"" << Y(0.0) << "\" x2=\"" << px(w) << "\" y2=\"" << Y(0.0)
     << "\"/>\n";
  for (std::size_t n = 0; n < figs.size(); ++n) {
    const SimSample& s = smp[frames[n]];
    os << "<g data-step=\"" << s.step << "\" data-t=\"" << num(s.t) << "\" data-phase=\"" << to_string(s.phase)
       << "\">\n";
    for (const Seg& g : figs[n])
      os << "  <line class=\"" << g.cls << "\" x1=\"" << X(g.a.x()) << "\" y1=\"" << Y(g.a.y()) << "\" x2=\""
         << X(g.b.x()) << "\" y2=\"" << Y(g.b.y()) << "\"/>\n";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fhzd
