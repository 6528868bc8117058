#include "padfuse/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "padfuse/error.hpp"

namespace padfuse {

PointIndex::PointIndex(std::vector<Vector3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::EmptyModel, "point index needs at least one point");
  std::vector<int> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(order, 0, static_cast<int>(order.size()), 0);
}

int PointIndex::build(std::vector<int>& order, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi, [&](int a, int b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({order[mid], axis});
  const int left = build(order, lo, mid, depth + 1);
  const int right = build(order, mid + 1, hi, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointIndex::search(int node, const Vector3& q, double& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vector3& p = points_[n.point];
  best = std::min(best, (p - q).squaredNorm());
  const double d = q[n.axis] - p[n.axis];
  const int near = d < 0.0 ? n.left : n.right;
  const int far = d < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (d * d < best) search(far, q, best);
}

double PointIndex::nearest_squared_distance(const Vector3& q) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

double mean_nearest_spacing(const std::vector<Vector3>& points) {
  if (points.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j != i) best = std::min(best, (points[i] - points[j]).squaredNorm());
    }
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(points.size());
}

AddS::AddS(const std::vector<Vector3>& surface_points)
    : index_(surface_points.empty() ? throw Error(ErrorCode::EmptyModel, "model has no surface points")
                                    : surface_points),
      spacing_(mean_nearest_spacing(surface_points)) {}

double AddS::operator()(const Pose& est, const Pose& truth) const {
  // Compare in the model frame of the ground truth.
  const Pose rel = truth.inverse() * est;
  double sum = 0.0;
  for (const auto& p : index_.points()) sum += std::sqrt(index_.nearest_squared_distance(rel * p));
  return sum / static_cast<double>(index_.size());
}

double add_s(const Pose& est, const Pose& truth, const ObjectModel& model) {
  return AddS(model.surface_points)(est, truth);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

Iqr interquartile(const std::vector<double>& values) { return {quantile(values, 0.25), quantile(values, 0.75)}; }

std::string to_string(WilcoxonStatus status) {
  return status == WilcoxonStatus::Ok ? "ok" : "all-zero-differences";
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
  if (a.size() < 6) throw Error(ErrorCode::TooFewSamples, "signed-rank test needs at least 6 pairs");

  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (!std::isfinite(diff)) throw Error(ErrorCode::InvalidArgument, "non-finite sample");
    if (diff != 0.0) d.push_back(diff);
  }
  WilcoxonResult out;
  out.n = d.size();
  if (d.empty()) {
    out.status = WilcoxonStatus::AllZeroDifferences;
    return out;
  }

  // Doubled average ranks are integers.
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long r2 = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long wp2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) wp2 += rank2[i];
  }
  out.w_plus = 0.5 * static_cast<double>(wp2);
  out.w_minus = 0.5 * static_cast<double>(total2 - wp2);
  out.statistic = std::min(out.w_plus, out.w_minus);

  if (n < 20) {
    out.exact = true;
    // counts[s] = number of sign assignments with doubled W+ equal to s
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s) {
        if (counts[s] != 0.0) counts[s + rank2[i]] += counts[s];
      }
      reach += rank2[i];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0;
    double upper = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= wp2) lower += counts[s];
      if (s >= wp2) upper += counts[s];
    }
    out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(out.w_plus - mean) - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Parse, "csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

void check_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "csv field may not contain commas, quotes or newlines: " + f);
  }
}

constexpr const char* kCsvHeader = "object,run,t,mode,add_s";

}  // namespace

std::string write_csv(const std::vector<AddSRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    check_field(r.object);
    check_field(r.run);
    check_field(r.mode);
    out += r.object + ',' + r.run + ',' + format_double(r.t) + ',' + r.mode + ',' + format_double(r.add_s) + '\n';
  }
  return out;
}

std::vector<AddSRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(ErrorCode::Parse, "csv header mismatch");
  std::vector<AddSRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 5) throw Error(ErrorCode::Parse, "csv line " + std::to_string(line_no) + ": expected 5 fields");
    rows.push_back({f[0], f[1], parse_double(f[2], line_no), f[3], parse_double(f[4], line_no)});
  }
  return rows;
}

}  // namespace padfuse
