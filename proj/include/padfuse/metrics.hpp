#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "padfuse/liegroup.hpp"
#include "padfuse/sdf.hpp"

namespace padfuse {

/// Static 3-d tree over a point set for exact nearest-neighbour queries.
class PointIndex {
 public:
  explicit PointIndex(std::vector<Vector3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Vector3>& points() const { return points_; }
  /// Squared distance to the nearest stored point.
  double nearest_squared_distance(const Vector3& q) const;

 private:
  struct Node {
    int point;
    int axis;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& order, int lo, int hi, int depth);
  void search(int node, const Vector3& q, double& best) const;

  std::vector<Vector3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/**
 * ADD-S over a sampled surface: mean over model points p of the distance from
 * est * p to the nearest point of the model placed at truth.
 */
class AddS {
 public:
  explicit AddS(const std::vector<Vector3>& surface_points);
  double operator()(const Pose& est, const Pose& truth) const;
  /// Mean nearest-neighbour spacing of the samples (the point-set error scale).
  double sampling_spacing() const { return spacing_; }

 private:
  PointIndex index_;
  double spacing_;
};

double add_s(const Pose& est, const Pose& truth, const ObjectModel& model);

/// Mean distance from each point to its nearest other point.
double mean_nearest_spacing(const std::vector<Vector3>& points);

// Order statistics with linear interpolation between closest ranks.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

struct Iqr {
  double q1 = 0.0;
  double q3 = 0.0;
  double width() const { return q3 - q1; }
};
Iqr interquartile(const std::vector<double>& values);

enum class WilcoxonStatus { Ok, AllZeroDifferences };

struct WilcoxonResult {
  WilcoxonStatus status = WilcoxonStatus::Ok;
  double statistic = 0.0;  ///< min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n = 0;  ///< pairs with a nonzero difference
  double p_value = 1.0;  ///< two-sided
  bool exact = false;
};

/**
 * Paired two-sided signed-rank test on a - b. Zero differences are dropped and
 * tied magnitudes share their average rank. Exact null distribution for fewer
 * than 20 nonzero pairs, normal approximation with continuity and tie
 * correction otherwise.
 */
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

std::string to_string(WilcoxonStatus status);

/// One row of the ADD-S table: object, run, t, mode, add_s.
struct AddSRow {
  std::string object;
  std::string run;
  double t = 0.0;
  std::string mode;
  double add_s = 0.0;

  bool operator==(const AddSRow&) const = default;
};

std::string write_csv(const std::vector<AddSRow>& rows);
std::vector<AddSRow> parse_csv(const std::string& text);

}  // namespace padfuse
