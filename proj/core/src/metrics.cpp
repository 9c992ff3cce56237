#include "mpsdn/metrics.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>

namespace mpsdn {

double jain_index(std::span<const double> throughputs) {
  if (throughputs.empty()) throw std::invalid_argument("jain_index: empty input");
  double sum = 0;
  double sum_sq = 0;
  for (double x : throughputs) {
    if (!(x >= 0)) throw std::invalid_argument("jain_index: negative throughput");
    sum += x;
    sum_sq += x * x;
  }
  if (!(sum > 0)) throw std::invalid_argument("jain_index: all throughputs are zero");
  return (sum * sum) / (static_cast<double>(throughputs.size()) * sum_sq);
}

namespace {

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& os, std::span<const MetricsRecord> records) {
  os << "# schema_version=" << kMetricsSchemaVersion << '\n';
  os << "t_start_s,t_end_s,flow,goodput_bps,cwnd_bytes,cwnd_min_bytes,reseq_occupancy,drops\n";
  for (const auto& r : records) {
    os << fixed(r.t_start_s, 3) << ',' << fixed(r.t_end_s, 3) << ',' << r.flow << ',' << fixed(r.goodput_bps, 1)
       << ',' << fixed(r.cwnd_bytes, 0) << ',' << fixed(r.cwnd_min_bytes, 0) << ',' << r.reseq_occupancy << ','
       << r.drops << '\n';
  }
}

void write_path_metrics_csv(std::ostream& os, std::span<const MetricsRecord> records) {
  os << "# schema_version=" << kMetricsSchemaVersion << '\n';
  os << "t_start_s,t_end_s,flow,path,throughput_bps\n";
  for (const auto& r : records)
    for (const auto& [label, bps] : r.path_throughput_bps)
      os << fixed(r.t_start_s, 3) << ',' << fixed(r.t_end_s, 3) << ',' << r.flow << ',' << label << ','
         << fixed(bps, 1) << '\n';
}

std::vector<double> goodput_series(std::span<const MetricsRecord> records, const std::string& flow) {
  std::vector<double> out;
  for (const auto& r : records)
    if (r.flow == flow) out.push_back(r.goodput_bps);
  return out;
}

std::vector<double> jain_per_interval(std::span<const MetricsRecord> records, std::span<const std::string> flows) {
  std::map<double, std::vector<double>> by_interval;
  for (const auto& r : records)
    for (const auto& f : flows)
      if (r.flow == f) by_interval[r.t_start_s].push_back(r.goodput_bps);
  std::vector<double> out;
  for (const auto& [t, xs] : by_interval) {
    if (xs.size() != flows.size()) continue;
    double sum = 0;
    for (double x : xs) sum += x;
    if (sum > 0) out.push_back(jain_index(xs));
  }
  return out;
}

}  // namespace mpsdn
