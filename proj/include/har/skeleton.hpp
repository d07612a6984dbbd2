#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace har {

/// Raised for malformed input data and violated preconditions.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ joints
//
// Canonical 28-joint taxonomy. The numeric order is the storage order in
// memory, in dataset files and in feature vectors.
enum class JointId : std::uint8_t {
  Head = 0,
  Neck,                          // 1
  Chest,                         // 2
  MiddleSpine,                   // 3
  LowerSpine,                    // 4
  Hip,                           // 5
  CenterOfMass,                  // 6
  CenterOfMassGroundProjection,  // 7
  REye,                          // 8
  EffectorHead,                  // 9
  RClavicle,                     // 10
  RShoulder,                     // 11
  RForearm,                      // 12
  RHand,                         // 13
  LClavicle,                     // 14
  LShoulder,                     // 15
  LForearm,                      // 16
  LHand,                         // 17
  RThigh,                        // 18
  RShin,                         // 19
  RFoot,                         // 20
  RToe,                          // 21
  EffectorRToe,                  // 22
  LThigh,                        // 23
  LShin,                         // 24
  LFoot,                         // 25
  LToe,                          // 26
  EffectorLToe                   // 27
};

inline constexpr int kJointCount = 28;

constexpr int index_of(JointId j) noexcept { return static_cast<int>(j); }
JointId joint_from_index(int index);  // throws on out-of-range

std::string_view joint_name(JointId j) noexcept;
std::optional<JointId> joint_from_name(std::string_view name) noexcept;

// One row per joint, columns (x, y, z) in meters.
using JointPositions = Eigen::Matrix<double, kJointCount, 3, Eigen::RowMajor>;

struct SkeletonFrame
{
  std::uint32_t frame_index = 0;
  JointPositions positions = JointPositions::Zero();

  bool operator==(SkeletonFrame const &) const = default;
};

// ------------------------------------------------------------ activities
//
enum class ActivityKind { Stationary, Dynamic };

inline constexpr int kClassCount = 9;

struct ActivityClass
{
  int label = 1;

  ActivityClass() = default;
  explicit ActivityClass(int l);  // throws unless 1 <= l <= 9

  std::string_view name() const noexcept;
  ActivityKind kind() const noexcept { return label <= 4 ? ActivityKind::Stationary : ActivityKind::Dynamic; }

  bool operator==(ActivityClass const &) const = default;
};

inline bool is_valid_label(int label) noexcept { return label >= 1 && label <= kClassCount; }
inline bool is_stationary(int label) noexcept { return label >= 1 && label <= 4; }

struct ActivitySequence
{
  int participant_id = 1;
  ActivityClass activity;
  std::vector<SkeletonFrame> frames;

  bool operator==(ActivitySequence const &) const = default;
};

// Number of source poses the feature extractor consumes per sequence.
inline constexpr std::size_t kPoseFrames = 51;

enum class ViolationKind {
  NonFinite,
  HeadNeckCoincident,
  NonMonotoneFrameIndex,
  TooFewFrames,
  ParticipantOutOfRange,
};

std::string_view to_string(ViolationKind k) noexcept;

struct Violation
{
  ViolationKind kind;
  std::optional<std::size_t> frame;  // position in seq.frames, when frame-specific
  std::string detail;

  bool operator==(Violation const &) const = default;
};

/// Empty result means the sequence satisfies every invariant.
std::vector<Violation> validate_sequence(ActivitySequence const &seq);

/// Frame-level checks shared by ingestion and validation.
bool frame_is_finite(SkeletonFrame const &f) noexcept;
bool head_neck_distinct(SkeletonFrame const &f) noexcept;

} // namespace har
