#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flowcurv/dynamics.hpp"
#include "flowcurv/errors.hpp"

namespace flowcurv {

/// Unreadable file or malformed tabular input.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position, or throws InputError.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated numeric table with a header row. Throws InputError with
/// the offending line number.
CsvTable parse_csv(std::string_view text);

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// Header t,x,y,z.
std::string trajectory_csv(const Trajectory& traj);

/// Reads columns t,x,y,z (others ignored). Output spacing is taken from the
/// first two rows.
Trajectory trajectory_from_csv(const CsvTable& table);

}  // namespace flowcurv
