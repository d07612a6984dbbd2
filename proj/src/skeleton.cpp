#include "har/skeleton.hpp"

#include <cmath>
#include <fmt/format.h>

namespace har {

namespace {

constexpr std::array<std::string_view, kJointCount> kJointNames = {
  "Head",     "Neck",      "Chest",        "MiddleSpine", "LowerSpine", "Hip",       "CenterOfMass",
  "CenterOfMassGroundProjection",          "REye",        "EffectorHead",
  "RClavicle", "RShoulder", "RForearm",    "RHand",       "LClavicle",  "LShoulder", "LForearm",
  "LHand",    "RThigh",    "RShin",        "RFoot",       "RToe",       "EffectorRToe",
  "LThigh",   "LShin",     "LFoot",        "LToe",        "EffectorLToe"};

constexpr std::array<std::string_view, kClassCount> kClassNames = {
  "sitting on office chair", "standing and texting", "sitting on stool", "lying on couch", "walking",
  "walking and texting",     "carrying objects",     "pulling object",   "running"};

} // namespace

JointId joint_from_index(int index)
{
  if (index < 0 || index >= kJointCount) {
    throw Error(fmt::format("joint index {} out of range", index));
  }
  return static_cast<JointId>(index);
}

std::string_view joint_name(JointId j) noexcept { return kJointNames[index_of(j)]; }

std::optional<JointId> joint_from_name(std::string_view name) noexcept
{
  for (int i = 0; i < kJointCount; ++i) {
    if (kJointNames[i] == name) { return static_cast<JointId>(i); }
  }
  return std::nullopt;
}

ActivityClass::ActivityClass(int l)
  : label(l)
{
  if (!is_valid_label(l)) { throw Error(fmt::format("activity label {} outside 1..9", l)); }
}

std::string_view ActivityClass::name() const noexcept { return kClassNames[label - 1]; }

std::string_view to_string(ViolationKind k) noexcept
{
  switch (k) {
  case ViolationKind::NonFinite: return "non-finite coordinate";
  case ViolationKind::HeadNeckCoincident: return "head and neck coincide";
  case ViolationKind::NonMonotoneFrameIndex: return "frame index not strictly increasing";
  case ViolationKind::TooFewFrames: return "too few frames";
  case ViolationKind::ParticipantOutOfRange: return "participant id outside 1..16";
  }
  return "unknown";
}

bool frame_is_finite(SkeletonFrame const &f) noexcept { return f.positions.allFinite(); }

bool head_neck_distinct(SkeletonFrame const &f) noexcept
{
  auto const d = f.positions.row(index_of(JointId::Neck)) - f.positions.row(index_of(JointId::Head));
  return d.squaredNorm() > 0.0;
}

std::vector<Violation> validate_sequence(ActivitySequence const &seq)
{
  std::vector<Violation> out;
  if (seq.participant_id < 1 || seq.participant_id > 16) {
    out.push_back({ViolationKind::ParticipantOutOfRange, std::nullopt, fmt::format("participant {}", seq.participant_id)});
  }
  if (seq.frames.size() < kPoseFrames) {
    out.push_back({ViolationKind::TooFewFrames, std::nullopt,
                   fmt::format("{} frames, need at least {}", seq.frames.size(), kPoseFrames)});
  }
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    auto const &f = seq.frames[i];
    if (!frame_is_finite(f)) {
      out.push_back({ViolationKind::NonFinite, i, fmt::format("frame {}", f.frame_index)});
    } else if (!head_neck_distinct(f)) {
      out.push_back({ViolationKind::HeadNeckCoincident, i, fmt::format("frame {}", f.frame_index)});
    }
    if (i > 0 && f.frame_index <= seq.frames[i - 1].frame_index) {
      out.push_back({ViolationKind::NonMonotoneFrameIndex, i,
                     fmt::format("frame {} follows {}", f.frame_index, seq.frames[i - 1].frame_index)});
    }
  }
  return out;
}

} // namespace har
