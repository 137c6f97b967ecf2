#ifndef RPT_CURVES_HPP_
#define RPT_CURVES_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace rpt {

// One episode as read back from a metrics log (rows for the same episode
// collapse to one entry).
struct LoggedEpisode {
  std::int64_t episode = 0;
  std::int64_t agent_timesteps = 0;
  std::string spawn_config;
  double episode_return = 0.0;
  int length = 0;
  bool captured = false;
};

// Parses a metrics CSV. Throws FormatError("<path>:<line>: ...") on any
// malformed line.
std::vector<LoggedEpisode> read_metrics_csv(const std::string& path);
std::vector<LoggedEpisode> parse_metrics_csv(const std::string& text,
                                             const std::string& source = "<memory>");

struct CurvePoint {
  std::string label;
  int bin = 0;
  double agent_timesteps = 0.0;  // right edge of the bin, already downsampled
  double mean_return = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int episodes = 0;
};

// Bins episodes by cumulative agent timesteps (bin b holds (b*w, (b+1)*w]).
// A downsample factor k merges each run of k consecutive bins into one
// output bin and divides its timestep coordinate by k, which maps a learner
// that sees 1/k of its agent's experience onto its own timesteps. The
// interval is mean +- 1.96 * sample stddev / sqrt(n). Bins without episodes
// are omitted.
std::vector<CurvePoint> aggregate_curves(const std::vector<std::vector<LoggedEpisode>>& logs,
                                         std::int64_t bin_width, int downsample,
                                         const std::string& label);

inline constexpr const char* kCurveHeader =
    "label,bin,agent_timesteps,mean_return,ci_low,ci_high,episodes";

void write_curves_csv(const std::vector<CurvePoint>& points, const std::string& path);

}  // namespace rpt

#endif  // RPT_CURVES_HPP_
