#include "msfa/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msfa {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InputError("not a number: '" + text + "' (" + where + ")");
  return v;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

std::vector<std::vector<std::string>> read_table(const std::string& path, std::vector<std::string>& header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("'" + path + "' is empty");
  header = split(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ":" << number << ": expected " << header.size() << " fields, got " << cells.size();
      throw InputError(msg.str());
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

Timestamp parse_timestamp(const std::string& text) {
  if (text.empty()) throw InputError("empty timestamp");
  Timestamp epoch = 0;
  const auto* end = text.data() + text.size();
  if (auto [ptr, ec] = std::from_chars(text.data(), end, epoch); ec == std::errc() && ptr == end) return epoch;

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, used = 0;
  char sep = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &used) != 6 ||
      (sep != 'T' && sep != ' '))
    throw InputError("unrecognized timestamp '" + text + "'");
  std::string rest = text.substr(static_cast<std::size_t>(used));
  if (rest.size() >= 3 && rest[0] == ':') {
    int n = 0;
    if (std::sscanf(rest.c_str(), ":%2d%n", &s, &n) != 1) throw InputError("bad seconds in '" + text + "'");
    rest = rest.substr(static_cast<std::size_t>(n));
    if (!rest.empty() && rest[0] == '.') {
      const auto stop = rest.find_first_not_of("0123456789", 1);
      rest = stop == std::string::npos ? std::string() : rest.substr(stop);
    }
  }
  long offset = 0;
  if (rest == "Z" || rest.empty()) {
  } else if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
    const int oh = std::stoi(rest.substr(1, 2));
    const int om = std::stoi(rest.substr(4, 2));
    offset = (rest[0] == '+' ? 1 : -1) * (oh * 3600L + om * 60L);
  } else {
    throw InputError("unrecognized timezone in '" + text + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw InputError("invalid date in '" + text + "'");
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + s - offset;
}

std::string format_timestamp(Timestamp t) {
  auto days = t / 86400;
  auto secs = t % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60), static_cast<int>(secs % 60));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

TimeSeriesFrame read_frame_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header.size() < 2 || header[0] != "timestamp")
    throw InputError("'" + path + "': header must be timestamp,<channel...>");
  TimeSeriesFrame f;
  f.channel_names.assign(header.begin() + 1, header.end());
  f.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size() - 1));
  f.timestamps.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    f.timestamps.push_back(parse_timestamp(rows[r][0]));
    for (std::size_t c = 1; c < header.size(); ++c)
      f.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) =
          parse_double(rows[r][c], path + " row " + std::to_string(r + 2));
  }
  f.validate();
  return f;
}

void write_frame_csv(const TimeSeriesFrame& frame, const std::string& path) {
  std::ostringstream out;
  out << "timestamp";
  for (std::size_t j = 0; j < frame.channels(); ++j)
    out << ',' << (frame.channel_names.empty() ? "ch" + std::to_string(j) : frame.channel_names[j]);
  out << '\n';
  for (std::size_t k = 0; k < frame.rows(); ++k) {
    out << format_timestamp(frame.timestamps[k]);
    for (std::size_t j = 0; j < frame.channels(); ++j)
      out << ',' << format_double(frame.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_truth_csv(const LabeledDataset& data, const std::string& path) {
  static const char* names[] = {"normal", "normal_switching", "new_pattern", "degradation", "fault"};
  std::ostringstream out;
  out << "timestamp,pattern,status\n";
  for (std::size_t k = 0; k < data.labels.size(); ++k)
    out << format_timestamp(data.frame.timestamps[k]) << ',' << data.labels[k] << ','
        << names[static_cast<int>(data.status[k])] << '\n';
  write_text(path, out.str());
}

TruthTable read_truth_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header != std::vector<std::string>{"timestamp", "pattern", "status"})
    throw InputError("'" + path + "': header must be timestamp,pattern,status");
  TruthTable t;
  for (const auto& r : rows) {
    t.timestamps.push_back(parse_timestamp(r[0]));
    t.labels.push_back(static_cast<int>(parse_double(r[1], path)));
    t.status.push_back(parse_status(r[2]));
  }
  return t;
}

std::string results_csv(const StreamResult& result) {
  std::ostringstream out;
  out << "timestamp,bip_ss,bip_sr,bip_ds,bip_dr,status\n";
  for (std::size_t k = 0; k < result.bips.size(); ++k) {
    const auto& b = result.bips[k];
    out << format_timestamp(b.timestamp);
    for (double v : b.bip) out << ',' << format_double(v);
    out << ',' << status_name(result.diagnoses[k].status) << '\n';
  }
  return out.str();
}

void write_results_csv(const StreamResult& result, const std::string& path) {
  write_text(path, results_csv(result));
}

ResultsTable read_results_csv(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header != std::vector<std::string>{"timestamp", "bip_ss", "bip_sr", "bip_ds", "bip_dr", "status"})
    throw InputError("'" + path + "': header must be timestamp,bip_ss,bip_sr,bip_ds,bip_dr,status");
  ResultsTable t;
  for (const auto& r : rows) {
    t.timestamps.push_back(parse_timestamp(r[0]));
    Quad q{};
    for (std::size_t i = 0; i < 4; ++i) q[i] = parse_double(r[i + 1], path);
    t.bips.push_back(q);
    t.status.push_back(parse_status(r[5]));
  }
  return t;
}

}  // namespace msfa
