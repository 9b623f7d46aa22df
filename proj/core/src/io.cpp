#include "flowcurv/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace flowcurv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto c = line.find(',');
    out.push_back(trim(line.substr(0, c)));
    if (c == std::string_view::npos) break;
    line.remove_prefix(c + 1);
  }
  return out;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw InputError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot replace '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InputError("CSV has no column '" + name + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  int line_no = 0;
  bool have_header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (!have_header) {
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw InputError("malformed CSV at line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto c = cells[i];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), row[i]);
      if (ec != std::errc() || ptr != c.data() + c.size() || c.empty())
        throw InputError("malformed CSV at line " + std::to_string(line_no) + ": '" + std::string(c) +
                         "' is not a number");
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw InputError("empty CSV");
  return table;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,x,y,z\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_number(traj.t[i]);
    for (int a = 0; a < 3; ++a) {
      out += ',';
      out += format_number(traj.x[i][a]);
    }
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_csv(const CsvTable& table) {
  const std::size_t ct = table.column("t"), cx = table.column("x"), cy = table.column("y"), cz = table.column("z");
  Trajectory traj;
  traj.method = "csv";
  for (const auto& r : table.rows) {
    if (!traj.t.empty() && !(r[ct] > traj.t.back())) throw InputError("trajectory times must increase");
    traj.t.push_back(r[ct]);
    traj.x.emplace_back(r[cx], r[cy], r[cz]);
  }
  if (!traj.t.empty()) traj.t0 = traj.t.front();
  if (traj.t.size() > 1) traj.dt_output = traj.t[1] - traj.t[0];
  traj.stop_time = traj.t.empty() ? 0.0 : traj.t.back();
  return traj;
}

}  // namespace flowcurv
