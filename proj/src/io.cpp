#include "vjlp/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace vjlp {

std::string format_double(double value)
{
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

void write_event_log_csv(std::ostream& out, const std::vector<JumpEvent>& events)
{
  out << "t,channel,xi,p_accept,accepted\n";
  for (const auto& e : events) {
    out << format_double(e.t) << ',' << (e.channel + 1) << ',';
    if (e.xi) out << format_double(*e.xi);
    out << ',' << format_double(e.p_accept) << ',' << (e.accepted ? 1 : 0) << '\n';
  }
}

void write_trajectory_header(std::ostream& out, Eigen::Index dim)
{
  out << "step,t";
  for (Eigen::Index i = 1; i <= dim; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= dim; ++i) out << ",v" << i;
  out << ",proposals,jumps,u1_evals,u0_evals\n";
}

void write_trajectory_row(std::ostream& out, const TrajectoryRow<double>& row)
{
  out << row.step << ',' << format_double(row.t);
  for (Eigen::Index i = 0; i < row.x.size(); ++i) out << ',' << format_double(row.x[i]);
  for (Eigen::Index i = 0; i < row.v.size(); ++i) out << ',' << format_double(row.v[i]);
  out << ',' << row.counters.proposals << ',' << row.counters.jumps << ',' << row.counters.u1_evals << ','
      << row.counters.u0_evals << '\n';
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord<double>& rec, Eigen::Index dim)
{
  write_trajectory_header(out, dim);
  for (const auto& row : rec.rows) write_trajectory_row(out, row);
}

void write_trajectory_svg(std::ostream& out, const TrajectoryRecord<double>& rec, const std::string& title)
{
  constexpr double kSize = 480.0;
  constexpr double kMargin = 24.0;
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const auto& r : rec.rows) {
    const double px = r.x[0];
    const double py = r.x.size() > 1 ? r.x[1] : r.v[0];
    lo_x = std::min(lo_x, px);
    hi_x = std::max(hi_x, px);
    lo_y = std::min(lo_y, py);
    hi_y = std::max(hi_y, py);
  }
  if (rec.rows.empty()) lo_x = lo_y = -1.0, hi_x = hi_y = 1.0;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = (kSize - 2 * kMargin) / span;
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" << title
      << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"0.6\" points=\"";
  for (const auto& r : rec.rows) {
    const double px = r.x[0];
    const double py = r.x.size() > 1 ? r.x[1] : r.v[0];
    const double sx = kSize / 2 + (px - cx) * scale;
    const double sy = kSize / 2 - (py - cy) * scale;
    char buf[64];
    const int len = std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx, sy);
    out.write(buf, len);
  }
  out << "\"/>\n</svg>\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
}

} // namespace vjlp
