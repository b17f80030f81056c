#include <algorithm>
#include <map>

#include "mfcs/sim.hpp"

namespace mfcs {

ExtendedReal order_statistic_quantile(std::vector<ExtendedReal> values, double q) {
  if (values.empty()) throw ShapeError("order_statistic_quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("order_statistic_quantile: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
  const ExtendedReal& a = values[lo];
  const ExtendedReal& b = values[lo + 1];
  if (!a.is_finite() || !b.is_finite()) return ExtendedReal::plus_infinity();
  return ExtendedReal::finite(a.value() + frac * (b.value() - a.value()));
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  const double n = static_cast<double>(v.size());
  const double mean = s.value() / n;
  if (v.size() < 2) return {mean, 0.0};
  CompensatedSum ss;
  for (double x : v) ss.add((x - mean) * (x - mean));
  return {mean, std::sqrt(ss.value() / (n - 1.0) / n)};
}

}  // namespace

std::vector<SummaryRow> aggregate(const std::vector<StepRecord>& records) {
  if (records.empty()) throw ShapeError("aggregate: no records");
  std::vector<std::string> method_order;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const StepRecord*>> groups;
  for (const auto& r : records) {
    auto it = std::find(method_order.begin(), method_order.end(), r.method);
    if (it == method_order.end()) {
      method_order.push_back(r.method);
      it = method_order.end() - 1;
    }
    groups[{static_cast<std::size_t>(it - method_order.begin()), r.t}].push_back(&r);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    SummaryRow row;
    row.method = method_order[key.first];
    row.t = key.second;
    row.n = group.size();
    std::vector<double> cov, metric, bound;
    std::vector<ExtendedReal> widths;
    std::size_t inf = 0;
    for (const auto* r : group) {
      cov.push_back(r->covered ? 1.0 : 0.0);
      metric.push_back(r->metric);
      widths.push_back(r->width);
      if (!r->width.is_finite()) ++inf;
      if (r->bound_relative) bound.push_back(*r->bound_relative);
    }
    const MeanSe c = mean_se(cov);
    const MeanSe m = mean_se(metric);
    row.coverage_mean = c.mean;
    row.coverage_se = c.se;
    row.metric_mean = m.mean;
    row.metric_se = m.se;
    row.width_median = order_statistic_quantile(widths, 0.5);
    row.width_q25 = order_statistic_quantile(widths, 0.25);
    row.width_q75 = order_statistic_quantile(widths, 0.75);
    row.inf_fraction = static_cast<double>(inf) / static_cast<double>(group.size());
    if (!bound.empty()) row.bound_relative_mean = mean_se(bound).mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mfcs
