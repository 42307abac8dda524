#ifndef VJLP_IO_HPP
#define VJLP_IO_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "vjlp/integrator.hpp"

namespace vjlp {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Polyline plot of (x1, x2) of a trajectory.
void write_trajectory_svg(std::ostream& out, const TrajectoryRecord<double>& rec, const std::string& title);

void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace vjlp

#endif // VJLP_IO_HPP
