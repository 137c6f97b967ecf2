#include "curves.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "error.hpp"
#include "trainer.hpp"

namespace rpt {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, const std::string& where, const char* what) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (in.fail() || !in.eof()) {
    throw FormatError(where + ": bad " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<LoggedEpisode> parse_metrics_csv(const std::string& text,
                                             const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw FormatError(source + ":1: empty metrics log");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsHeader) {
    throw FormatError(source + ":1: unexpected header '" + line + "'");
  }
  std::vector<LoggedEpisode> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto f = split(line);
    if (f.size() != 9) {
      throw FormatError(where + ": expected 9 fields, found " + std::to_string(f.size()));
    }
    LoggedEpisode e;
    e.episode = parse_number<std::int64_t>(f[0], where, "episode");
    e.agent_timesteps = parse_number<std::int64_t>(f[1], where, "agent_timesteps");
    e.spawn_config = f[2];
    e.episode_return = parse_number<double>(f[6], where, "episode_return");
    e.length = parse_number<int>(f[7], where, "episode_length");
    const int captured = parse_number<int>(f[8], where, "captured");
    if (captured != 0 && captured != 1) throw FormatError(where + ": captured must be 0 or 1");
    e.captured = captured == 1;
    if (!out.empty() && out.back().episode == e.episode) {
      const LoggedEpisode& prev = out.back();
      if (prev.agent_timesteps != e.agent_timesteps || prev.episode_return != e.episode_return ||
          prev.length != e.length || prev.captured != e.captured) {
        throw FormatError(where + ": rows for episode " + std::to_string(e.episode) +
                          " disagree on team values");
      }
      continue;
    }
    if (!out.empty() && e.episode < out.back().episode) {
      throw FormatError(where + ": episode index goes backwards");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LoggedEpisode> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics log " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_metrics_csv(buf.str(), path);
}

std::vector<CurvePoint> aggregate_curves(const std::vector<std::vector<LoggedEpisode>>& logs,
                                         std::int64_t bin_width, int downsample,
                                         const std::string& label) {
  if (bin_width <= 0) throw UsageError("bin width must be positive");
  if (downsample <= 0) throw UsageError("downsample factor must be positive");
  std::map<std::int64_t, std::vector<double>> bins;
  for (const auto& log : logs) {
    for (const auto& e : log) {
      if (e.agent_timesteps <= 0) continue;
      const std::int64_t input_bin = (e.agent_timesteps - 1) / bin_width;
      bins[input_bin / downsample].push_back(e.episode_return);
    }
  }
  std::vector<CurvePoint> out;
  for (const auto& [bin, values] : bins) {
    CurvePoint p;
    p.label = label;
    p.bin = static_cast<int>(bin);
    p.agent_timesteps = static_cast<double>((bin + 1) * downsample * bin_width) / downsample;
    p.episodes = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean_return = sum / p.episodes;
    double half = 0.0;
    if (p.episodes > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean_return) * (v - p.mean_return);
      half = 1.96 * std::sqrt(ss / (p.episodes - 1)) / std::sqrt(static_cast<double>(p.episodes));
    }
    p.ci_low = p.mean_return - half;
    p.ci_high = p.mean_return + half;
    out.push_back(p);
  }
  return out;
}

void write_curves_csv(const std::vector<CurvePoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << kCurveHeader << "\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.1f,%.6f,%.6f,%.6f,%d", p.bin, p.agent_timesteps,
                  p.mean_return, p.ci_low, p.ci_high, p.episodes);
    out << p.label << "," << buf << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace rpt
