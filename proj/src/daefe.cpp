#include "har/daefe.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <ostream>

namespace har {

std::string_view to_string(Modality m) noexcept
{
  switch (m) {
  case Modality::Coordinates: return "coordinates";
  case Modality::Velocity: return "velocity";
  case Modality::Acceleration: return "acceleration";
  }
  return "unknown";
}

Modality parse_modality(std::string_view name)
{
  if (name == "coordinates") { return Modality::Coordinates; }
  if (name == "velocity") { return Modality::Velocity; }
  if (name == "acceleration") { return Modality::Acceleration; }
  throw Error(fmt::format("unknown modality '{}' (expected coordinates, velocity or acceleration)", name));
}

Dims parse_dims(std::string_view text)
{
  if (text == "2") { return Dims::Two; }
  if (text == "3") { return Dims::Three; }
  throw Error(fmt::format("dims must be 2 or 3, got '{}'", text));
}

// ---------------------------------------------------------------- subsets

namespace {

using J = JointId;

std::vector<JointId> sorted(std::vector<JointId> v)
{
  std::sort(v.begin(), v.end(), [](JointId a, JointId b) { return index_of(a) < index_of(b); });
  return v;
}

// Head is a member so that C9 and C18 carry 8 and 17 feature joints; as the
// reference joint it contributes no feature itself.
std::vector<JointId> c9_members()
{
  return sorted({J::Head, J::Neck, J::Chest, J::Hip, J::CenterOfMass, J::RHand, J::LHand, J::RFoot, J::LFoot});
}

std::vector<JointId> c18_members()
{
  auto m = c9_members();
  for (auto j : {J::MiddleSpine, J::RShoulder, J::RForearm, J::LShoulder, J::LForearm, J::RThigh, J::RShin, J::LThigh,
                 J::LShin}) {
    m.push_back(j);
  }
  return sorted(std::move(m));
}

} // namespace

JointSubset JointSubset::c9() { return {Kind::C9, c9_members()}; }
JointSubset JointSubset::c18() { return {Kind::C18, c18_members()}; }

JointSubset JointSubset::c28()
{
  std::vector<JointId> all;
  for (int i = 0; i < kJointCount; ++i) { all.push_back(joint_from_index(i)); }
  return {Kind::C28, std::move(all)};
}

JointSubset JointSubset::custom(std::vector<JointId> joints)
{
  if (joints.empty()) { throw Error("custom joint subset is empty"); }
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i] == JointId::Head) { throw Error("Head is the reference joint and cannot be a feature joint"); }
    for (std::size_t k = 0; k < i; ++k) {
      if (joints[k] == joints[i]) { throw Error(fmt::format("joint {} listed twice", joint_name(joints[i]))); }
    }
  }
  return {Kind::Custom, sorted(std::move(joints))};
}

JointSubset JointSubset::parse(std::string_view text)
{
  if (text == "c9") { return c9(); }
  if (text == "c18") { return c18(); }
  if (text == "c28") { return c28(); }
  constexpr std::string_view prefix = "list:";
  if (text.starts_with(prefix)) {
    std::vector<JointId> joints;
    auto rest = text.substr(prefix.size());
    while (!rest.empty()) {
      auto const comma = rest.find(',');
      auto const name = rest.substr(0, comma);
      auto const id = joint_from_name(name);
      if (!id) { throw Error(fmt::format("unknown joint '{}'", name)); }
      joints.push_back(*id);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    return custom(std::move(joints));
  }
  throw Error(fmt::format("unknown joint subset '{}' (expected one of {{c9, c18, c28}} or list:<names>)", text));
}

std::vector<JointId> JointSubset::feature_joints() const
{
  std::vector<JointId> out;
  std::copy_if(members_.begin(), members_.end(), std::back_inserter(out), [](JointId j) { return j != JointId::Head; });
  return out;
}

std::string JointSubset::name() const
{
  switch (kind_) {
  case Kind::C9: return "c9";
  case Kind::C18: return "c18";
  case Kind::C28: return "c28";
  case Kind::Custom: break;
  }
  std::string out = "list:";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i) { out += ','; }
    out += joint_name(members_[i]);
  }
  return out;
}

std::vector<std::string> feature_names(FeatureSpec const &spec)
{
  std::vector<std::string> out;
  static constexpr char axes[] = {'x', 'y', 'z'};
  for (auto j : spec.subset.feature_joints()) {
    for (int a = 0; a < to_int(spec.dims); ++a) { out.push_back(fmt::format("{}_{}", joint_name(j), axes[a])); }
  }
  return out;
}

FeatureMatrix FeatureMatrix::subset(std::span<std::size_t const> index) const
{
  FeatureMatrix out;
  out.provenance = provenance;
  out.rows.resize(static_cast<Eigen::Index>(index.size()), rows.cols());
  if (labels) { out.labels.emplace(); }
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto const r = index[i];
    out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(r));
    if (labels) { out.labels->push_back((*labels)[r]); }
    out.participants.push_back(participants[r]);
    out.activities.push_back(activities[r]);
    out.frames.push_back(frames[r]);
  }
  return out;
}

// ------------------------------------------------------------- operations

std::vector<SkeletonFrame> select_frames_at(ActivitySequence const &seq, std::size_t start)
{
  if (seq.frames.size() < kPoseFrames) {
    throw Error(fmt::format("participant {} activity {}: {} frames, need at least {}", seq.participant_id,
                            seq.activity.label, seq.frames.size(), kPoseFrames));
  }
  if (start + kPoseFrames > seq.frames.size()) {
    throw Error(fmt::format("frame window [{}, {}) exceeds {} frames", start, start + kPoseFrames, seq.frames.size()));
  }
  auto const first = seq.frames.begin() + static_cast<std::ptrdiff_t>(start);
  return {first, first + static_cast<std::ptrdiff_t>(kPoseFrames)};
}

std::vector<SkeletonFrame> select_frames(ActivitySequence const &seq, Modality)
{
  // The differenced modalities consume the same 51 poses.
  std::size_t const n = seq.frames.size();
  std::size_t const start = n >= kPoseFrames ? (n - kPoseFrames) / 2 : 0;
  return select_frames_at(seq, start);
}

std::vector<JointPositions> derive_modality(std::span<SkeletonFrame const> frames, Modality modality)
{
  if (frames.size() != kPoseFrames) {
    throw Error(fmt::format("expected {} frames, got {}", kPoseFrames, frames.size()));
  }
  std::vector<JointPositions> out;
  out.reserve(frames.size());
  for (auto const &f : frames) { out.push_back(f.positions); }
  int const order = modality == Modality::Coordinates ? 0 : modality == Modality::Velocity ? 1 : 2;
  for (int k = 0; k < order; ++k) {
    for (std::size_t i = 0; i + 1 < out.size(); ++i) { out[i] = out[i + 1] - out[i]; }
    out.pop_back();
  }
  return out;
}

FeatureMatrix build_feature_matrix(DatasetManifest const &manifest, FeatureSpec const &spec, bool labeled,
                                   std::optional<std::size_t> window_start)
{
  std::vector<std::size_t> order(manifest.sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto const &sa = manifest.sequences[a];
    auto const &sb = manifest.sequences[b];
    return std::tie(sa.participant_id, sa.activity.label) < std::tie(sb.participant_id, sb.activity.label);
  });

  std::size_t const per_seq = rows_per_sequence(spec.modality);
  auto const dim = static_cast<Eigen::Index>(spec.dimension());
  if (dim == 0) { throw Error("feature subset yields no features"); }

  FeatureMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(order.size() * per_seq), dim);
  if (labeled) { m.labels.emplace(); }

  Eigen::Index r = 0;
  for (auto const s : order) {
    auto const &seq = manifest.sequences[s];
    auto const frames = window_start ? select_frames_at(seq, *window_start) : select_frames(seq, spec.modality);
    auto const vectors = derive_modality(frames, spec.modality);
    for (std::size_t i = 0; i < vectors.size(); ++i, ++r) {
      try {
        m.rows.row(r) = normalize_posture(vectors[i], spec.subset, spec.dims, spec.modality).transpose();
      } catch (Error const &e) {
        throw Error(fmt::format("participant {} activity {} frame {}: {}", seq.participant_id, seq.activity.label,
                                frames[i].frame_index, e.what()));
      }
      if (labeled) { m.labels->push_back(seq.activity.label); }
      m.participants.push_back(seq.participant_id);
      m.activities.push_back(seq.activity.label);
      m.frames.push_back(frames[i].frame_index);
    }
  }

  m.provenance.modality = spec.modality;
  m.provenance.subset = spec.subset.name();
  m.provenance.dims = to_int(spec.dims);
  m.provenance.source = manifest.source.kind == DatasetSource::Kind::Synthetic
                          ? fmt::format("synthetic:{}:seed={}", manifest.source.algorithm, manifest.source.seed)
                          : "file";
  return m;
}

void write_feature_matrix(FeatureMatrix const &m, FeatureSpec const &spec, std::ostream &out)
{
  auto const names = feature_names(spec);
  for (std::size_t i = 0; i < names.size(); ++i) { out << (i ? "," : "") << names[i]; }
  if (m.labels) { out << ",label"; }
  out << '\n';
  fmt::memory_buffer buf;
  for (Eigen::Index r = 0; r < m.rows.rows(); ++r) {
    buf.clear();
    for (Eigen::Index c = 0; c < m.rows.cols(); ++c) {
      fmt::format_to(std::back_inserter(buf), "{}{:.9g}", c ? "," : "", m.rows(r, c));
    }
    if (m.labels) { fmt::format_to(std::back_inserter(buf), ",{}", (*m.labels)[static_cast<std::size_t>(r)]); }
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

} // namespace har
