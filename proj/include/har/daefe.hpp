#pragma once

// Posture feature extraction: frame subsetting, velocity/acceleration
// derivation, head-referenced normalization, joint-subset selection and
// assembly of the labeled activity-feature matrix.

#include "har/dataset.hpp"
#include "har/skeleton.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace har {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Modality { Coordinates, Velocity, Acceleration };

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view name);  // throws har::Error

/// Feature rows each modality yields per sequence: 51, 50 and 49.
constexpr std::size_t rows_per_sequence(Modality m) noexcept
{
  switch (m) {
  case Modality::Coordinates: return kPoseFrames;
  case Modality::Velocity: return kPoseFrames - 1;
  case Modality::Acceleration: return kPoseFrames - 2;
  }
  return 0;
}

enum class Dims : int { Two = 2, Three = 3 };

inline int to_int(Dims d) noexcept { return static_cast<int>(d); }
Dims parse_dims(std::string_view text);

class JointSubset
{
public:
  enum class Kind { C9, C18, C28, Custom };

  static JointSubset c9();
  static JointSubset c18();
  static JointSubset c28();
  /// Nonempty, duplicate-free, and without Head.
  static JointSubset custom(std::vector<JointId> joints);
  /// Accepts `c9`, `c18`, `c28` or `list:<Joint>,<Joint>,...`.
  static JointSubset parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  std::span<JointId const> members() const noexcept { return members_; }
  /// Members that contribute a feature, in canonical order (Head dropped).
  std::vector<JointId> feature_joints() const;
  std::string name() const;

  bool operator==(JointSubset const &) const = default;

private:
  JointSubset(Kind k, std::vector<JointId> m)
    : kind_(k)
    , members_(std::move(m))
  {}

  Kind kind_;
  std::vector<JointId> members_;
};

struct FeatureSpec
{
  Modality modality = Modality::Coordinates;
  JointSubset subset = JointSubset::c28();
  Dims dims = Dims::Three;

  std::size_t dimension() const { return subset.feature_joints().size() * static_cast<std::size_t>(to_int(dims)); }
};

std::vector<std::string> feature_names(FeatureSpec const &spec);

struct Provenance
{
  Modality modality = Modality::Coordinates;
  std::string subset;
  int dims = 3;
  std::string source;
};

struct FeatureMatrix
{
  RowMatrix rows;
  std::optional<std::vector<int>> labels;
  std::vector<int> participants;  // per row
  std::vector<int> activities;    // per row, present even when unlabeled
  std::vector<std::uint32_t> frames;
  Provenance provenance;

  Eigen::Index size() const noexcept { return rows.rows(); }
  Eigen::Index dimension() const noexcept { return rows.cols(); }

  /// Rows at `index` in the given order.
  FeatureMatrix subset(std::span<std::size_t const> index) const;
};

// ------------------------------------------------------------- operations

/// Centered contiguous 51-frame window. Throws when the sequence is shorter.
std::vector<SkeletonFrame> select_frames(ActivitySequence const &seq, Modality modality);

/// Contiguous 51-frame window starting at position `start`.
std::vector<SkeletonFrame> select_frames_at(ActivitySequence const &seq, std::size_t start);

/// Positions (51), first differences (50) or second differences (49), in
/// meters, meters/frame and meters/frame^2.
std::vector<JointPositions> derive_modality(std::span<SkeletonFrame const> frames, Modality modality);

/// Coordinates: f_i = (J_i - J_Head) / |J_Neck - J_Head| for each feature
/// joint; velocity and acceleration vectors are taken as-is. The result is
/// laid out joint-major, (x, y[, z]) per joint.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
normalize_posture(Eigen::MatrixBase<Derived> const &joints, JointSubset const &subset, Dims dims, Modality modality)
{
  using Scalar = typename Derived::Scalar;
  static_assert(Derived::ColsAtCompileTime == 3 || Derived::ColsAtCompileTime == Eigen::Dynamic);
  auto const members = subset.feature_joints();
  int const d = to_int(dims);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(static_cast<Eigen::Index>(members.size()) * d);

  auto const head = joints.row(index_of(JointId::Head));
  Scalar scale(1);
  bool const relative = modality == Modality::Coordinates;
  if (relative) {
    Scalar const dist = (joints.row(index_of(JointId::Neck)) - head).norm();
    if (!(dist > Scalar(0))) { throw Error("head and neck coincide; posture cannot be normalized"); }
    scale = Scalar(1) / dist;
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto const row = joints.row(index_of(members[i]));
    for (int a = 0; a < d; ++a) {
      out(static_cast<Eigen::Index>(i) * d + a) = relative ? (row(a) - head(a)) * scale : row(a);
    }
  }
  return out;
}

/// Rows ordered by (participant, activity, frame); labels attached iff `labeled`.
FeatureMatrix build_feature_matrix(DatasetManifest const &manifest, FeatureSpec const &spec, bool labeled,
                                   std::optional<std::size_t> window_start = std::nullopt);

/// CSV: one column per feature name, plus `label` when labeled.
void write_feature_matrix(FeatureMatrix const &m, FeatureSpec const &spec, std::ostream &out);

} // namespace har
