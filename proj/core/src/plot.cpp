#include "ls3/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ls3/metrics.hpp"
#include "ls3/orchestrator.hpp"

namespace ls3 {

SeedCurve curve_from_records(const std::vector<nlohmann::json>& records) {
  SeedCurve c;
  for (const auto& r : records) {
    if (r.value("kind", "") != "trajectory") continue;
    c.reward.push_back(r.at("total_reward").get<double>());
    c.success.push_back(r.at("success").get<bool>() ? 1.0 : 0.0);
    c.violation.push_back(r.at("violation").get<bool>() ? 1.0 : 0.0);
  }
  return c;
}

std::vector<double> running_mean(const std::vector<double>& v, std::size_t window) {
  if (window == 0) throw std::invalid_argument("running_mean: window must be >= 1");
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= window) sum -= v[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

LearningCurves aggregate_curves(const std::vector<SeedCurve>& seeds, std::size_t window) {
  if (seeds.empty()) throw std::invalid_argument("aggregate_curves: no metrics");
  LearningCurves out;
  out.seeds = seeds.size();
  std::size_t n = seeds.front().reward.size();
  bool uneven = false;
  for (const auto& s : seeds) {
    uneven = uneven || s.reward.size() != n;
    n = std::min(n, s.reward.size());
  }
  if (uneven) {
    out.warnings.push_back("trajectory counts differ across seeds; truncating to " + std::to_string(n));
  }
  std::vector<std::vector<double>> succ, viol;
  for (const auto& s : seeds) {
    succ.push_back(running_mean(s.success, window));
    viol.push_back(running_mean(s.violation, window));
  }
  const auto k = static_cast<double>(seeds.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col;
    double sr = 0.0, vr = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      col.push_back(seeds[s].reward[i]);
      sr += succ[s][i];
      vr += viol[s][i];
    }
    double mean = 0.0;
    for (double v : col) mean += v;
    out.reward_mean.push_back(mean / k);
    out.reward_stderr.push_back(standard_error(col));
    out.success_rate.push_back(sr / k);
    out.violation_rate.push_back(vr / k);
  }
  return out;
}

std::string curves_csv(const LearningCurves& c) {
  std::ostringstream os;
  os.precision(10);
  os << "trajectory,reward_mean,reward_stderr,success_rate,violation_rate\n";
  for (std::size_t i = 0; i < c.reward_mean.size(); ++i) {
    os << i << ',' << c.reward_mean[i] << ',' << c.reward_stderr[i] << ',' << c.success_rate[i] << ','
       << c.violation_rate[i] << '\n';
  }
  return os.str();
}

namespace {

constexpr double kWidth = 640, kPanel = 180, kLeft = 60, kRight = 20, kTop = 30, kGap = 40;

void panel(std::ostringstream& os, double y0, const std::string& title, const std::vector<double>& mean,
           const std::vector<double>* band, double lo, double hi, const char* color) {
  const double w = kWidth - kLeft - kRight;
  const std::size_t n = mean.size();
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? w * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
  auto py = [&](double v) { return y0 + kPanel * (1.0 - (std::clamp(v, lo, hi) - lo) / (hi - lo)); };

  os << "<text x=\"" << kLeft << "\" y=\"" << y0 - 8 << "\" font-size=\"13\">" << title << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << kPanel
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (double v : {lo, hi}) {
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << v
       << "</text>\n";
  }
  if (n == 0) return;
  if (band) {
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < n; ++i) os << px(i) << ',' << py(mean[i] + (*band)[i]) << ' ';
    for (std::size_t i = n; i-- > 0;) os << px(i) << ',' << py(mean[i] - (*band)[i]) << ' ';
    os << "\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < n; ++i) os << px(i) << ',' << py(mean[i]) << ' ';
  os << "\"/>\n";
}

}  // namespace

std::string curves_svg(const LearningCurves& c) {
  const double height = kTop + 3 * kPanel + 2 * kGap + 30;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
     << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double lo = -1.0, hi = 0.0;
  for (std::size_t i = 0; i < c.reward_mean.size(); ++i) lo = std::min(lo, c.reward_mean[i] - c.reward_stderr[i]);
  lo = std::floor(lo / 10.0) * 10.0;
  panel(os, kTop, "Total reward per trajectory (mean +/- s.e., " + std::to_string(c.seeds) + " seeds)", c.reward_mean,
        &c.reward_stderr, lo, hi, "#1f77b4");
  panel(os, kTop + kPanel + kGap, "Success rate (running mean, window 10)", c.success_rate, nullptr, 0.0, 1.0,
        "#2ca02c");
  panel(os, kTop + 2 * (kPanel + kGap), "Violation rate (running mean, window 10)", c.violation_rate, nullptr, 0.0,
        1.0, "#d62728");
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << height - 8
     << "\" font-size=\"12\" text-anchor=\"middle\">online trajectory</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> write_learning_curves(const std::vector<std::filesystem::path>& metrics,
                                               const std::filesystem::path& out) {
  if (metrics.empty()) throw std::invalid_argument("plot: at least one metrics file is required");
  std::vector<SeedCurve> seeds;
  for (const auto& p : metrics) seeds.push_back(curve_from_records(read_jsonl(p)));
  const auto curves = aggregate_curves(seeds);
  std::filesystem::path base = out;
  if (base.extension() == ".csv" || base.extension() == ".svg") base.replace_extension();
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  auto with_ext = [&](const char* ext) { return std::filesystem::path(base.string() + ext); };
  std::ofstream(with_ext(".csv")) << curves_csv(curves);
  std::ofstream(with_ext(".svg")) << curves_svg(curves);
  return curves.warnings;
}

}  // namespace ls3
