#include "har/dataset.hpp"

#include "har/random.hpp"

#include <Eigen/Geometry>

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace har {

std::size_t DatasetManifest::frame_count() const noexcept
{
  std::size_t n = 0;
  for (auto const &s : sequences) { n += s.frames.size(); }
  return n;
}

// ==================================================================== CSV

std::string csv_header()
{
  std::string h = "participant,activity,frame";
  for (int j = 0; j < kJointCount; ++j) {
    auto const name = joint_name(joint_from_index(j));
    for (char axis : {'x', 'y', 'z'}) { h += fmt::format(",{}_{}", name, axis); }
  }
  return h;
}

double quantize_coordinate(double v)
{
  auto const text = fmt::format("{:.9g}", v);
  double out = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto const pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <typename T> T parse_number(std::string_view field, std::size_t line_no, std::string_view what)
{
  T value{};
  auto const *end = field.data() + field.size();
  auto const [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw Error(fmt::format("line {}: malformed {} '{}'", line_no, what, field));
  }
  return value;
}

} // namespace

DatasetManifest parse_dataset(std::istream &in)
{
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) { throw Error("line 1: missing header"); }
  ++line_no;
  if (!line.empty() && line.back() == '\r') { line.pop_back(); }
  auto const expected = csv_header();
  if (line != expected) {
    auto const got = split_fields(line);
    auto const want = split_fields(expected);
    for (std::size_t i = 0; i < std::max(got.size(), want.size()); ++i) {
      if (i >= got.size() || i >= want.size() || got[i] != want[i]) {
        throw Error(fmt::format("line 1: unknown or misplaced column {} '{}' (expected '{}')", i + 1,
                                i < got.size() ? got[i] : "", i < want.size() ? want[i] : ""));
      }
    }
  }

  std::map<std::pair<int, int>, std::size_t> seen;
  // Source line of every frame, for locating validation failures.
  std::vector<std::vector<std::size_t>> frame_lines;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line.empty()) { continue; }
    auto const fields = split_fields(line);
    if (fields.size() != kCsvColumns) {
      throw Error(fmt::format("line {}: expected {} fields, found {}", line_no, kCsvColumns, fields.size()));
    }
    int const participant = parse_number<int>(fields[0], line_no, "participant");
    int const label = parse_number<int>(fields[1], line_no, "activity");
    auto const frame_index = parse_number<std::uint32_t>(fields[2], line_no, "frame");
    if (!is_valid_label(label)) { throw Error(fmt::format("line {}: activity {} outside 1..9", line_no, label)); }

    SkeletonFrame frame;
    frame.frame_index = frame_index;
    for (int j = 0; j < kJointCount; ++j) {
      for (int a = 0; a < 3; ++a) {
        frame.positions(j, a) = parse_number<double>(fields[3 + 3 * j + a], line_no, "coordinate");
      }
    }

    auto const key = std::make_pair(participant, label);
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, m.sequences.size()).first;
      m.sequences.push_back({participant, ActivityClass(label), {}});
      frame_lines.emplace_back();
    } else if (it->second + 1 != m.sequences.size()) {
      throw Error(fmt::format("line {}: rows of participant {} activity {} are not contiguous", line_no, participant, label));
    }
    m.sequences[it->second].frames.push_back(frame);
    frame_lines[it->second].push_back(line_no);
  }

  for (std::size_t s = 0; s < m.sequences.size(); ++s) {
    auto const violations = validate_sequence(m.sequences[s]);
    if (violations.empty()) { continue; }
    auto const &v = violations.front();
    auto const &seq = m.sequences[s];
    std::size_t const where = v.frame ? frame_lines[s][*v.frame] : frame_lines[s].front();
    throw Error(fmt::format("line {}: participant {} activity {}: {} ({})", where, seq.participant_id,
                            seq.activity.label, to_string(v.kind), v.detail));
  }
  m.source.kind = DatasetSource::Kind::FileIngest;
  return m;
}

DatasetManifest read_dataset(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw Error(fmt::format("cannot open '{}'", path.string())); }
  return parse_dataset(in);
}

void write_dataset(DatasetManifest const &manifest, std::ostream &out)
{
  out << csv_header() << '\n';
  fmt::memory_buffer buf;
  for (auto const &seq : manifest.sequences) {
    for (auto const &f : seq.frames) {
      buf.clear();
      fmt::format_to(std::back_inserter(buf), "{},{},{}", seq.participant_id, seq.activity.label, f.frame_index);
      for (int j = 0; j < kJointCount; ++j) {
        for (int a = 0; a < 3; ++a) { fmt::format_to(std::back_inserter(buf), ",{:.9g}", f.positions(j, a)); }
      }
      buf.push_back('\n');
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

void write_dataset(DatasetManifest const &manifest, std::filesystem::path const &path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) { throw Error(fmt::format("cannot write '{}'", path.string())); }
  write_dataset(manifest, out);
  if (!out) { throw Error(fmt::format("write to '{}' failed", path.string())); }
}

// ============================================================== synthetic

void SynthSpec::validate() const
{
  if (n_participants < 1 || n_participants > 16) { throw Error("participants must be in 1..16"); }
  if (frames_per_sequence < static_cast<int>(kPoseFrames)) {
    throw Error(fmt::format("frames per sequence must be at least {}", kPoseFrames));
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) { throw Error("noise sigma must be finite and >= 0"); }
  for (auto const &r : gait_speed) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo)) { throw Error("gait speed ranges must satisfy 0 < lo <= hi"); }
  }
}

namespace {

using Vec3 = Eigen::Vector3d;

constexpr double deg(double d) { return d * std::numbers::pi / 180.0; }

// Body frame: +x forward (direction of travel), +y up, +z to the body's right.
struct ArmPose
{
  double flexion = deg(5);    // forward raise of the upper arm from hanging
  double abduction = deg(8);  // sideways raise
  double elbow = deg(10);     // elbow bend, forearm rotates further forward
};

struct LegPose
{
  double flexion = 0.0;  // thigh forward from vertical
  double knee = 0.0;     // knee bend, shin rotates back
};

struct Pose
{
  Vec3 root{0.0, 0.95, 0.0};  // Hip joint, world frame
  double torso_pitch = 0.0;   // forward lean
  double head_bow = 0.0;      // head forward bend relative to torso
  double body_roll = 0.0;     // whole-body rotation about the travel axis
  double body_tilt = 0.0;     // whole-body rotation about z (lying down)
  ArmPose right_arm, left_arm;
  LegPose right_leg, left_leg;
  Vec3 right_hand_offset = Vec3::Zero();
  Vec3 left_hand_offset = Vec3::Zero();
  Vec3 right_foot_offset = Vec3::Zero();
  Vec3 left_foot_offset = Vec3::Zero();
};

struct Body
{
  double scale = 1.0;
};

Vec3 sagittal(double angle_from_down, double lateral_angle, double side)
{
  // Unit vector hanging down, swung forward by angle_from_down and
  // out to `side` by lateral_angle.
  return Vec3(std::sin(angle_from_down) * std::cos(lateral_angle), -std::cos(angle_from_down) * std::cos(lateral_angle),
              side * std::sin(lateral_angle));
}

JointPositions forward_kinematics(Pose const &p, Body const &b)
{
  double const s = b.scale;
  JointPositions J;
  auto set = [&J](JointId id, Vec3 const &v) { J.row(index_of(id)) = v.transpose(); };

  // Torso, relative to the hip, before whole-body rotation.
  Vec3 const up(std::sin(p.torso_pitch), std::cos(p.torso_pitch), 0.0);
  Vec3 const right(0.0, 0.0, 1.0);
  auto spine = [&](double h) { return Vec3(up * (h * s)); };

  Vec3 const hip = Vec3::Zero();
  Vec3 const neck = spine(0.55);
  Vec3 const head_dir(std::sin(p.torso_pitch + p.head_bow), std::cos(p.torso_pitch + p.head_bow), 0.0);
  Vec3 const head = neck + head_dir * (0.15 * s);

  set(JointId::Hip, hip);
  set(JointId::LowerSpine, spine(0.10));
  set(JointId::MiddleSpine, spine(0.25));
  set(JointId::Chest, spine(0.40));
  set(JointId::Neck, neck);
  set(JointId::Head, head);
  set(JointId::EffectorHead, neck + head_dir * (0.25 * s));
  set(JointId::REye, head + head_dir * (0.03 * s) + Vec3(0.08 * s, 0.0, 0.03 * s));
  set(JointId::CenterOfMass, spine(0.05));

  Vec3 const shoulder_base = spine(0.50);
  for (double side : {1.0, -1.0}) {
    bool const r = side > 0;
    ArmPose const &arm = r ? p.right_arm : p.left_arm;
    Vec3 const clavicle = shoulder_base + right * (side * 0.08 * s);
    Vec3 const shoulder = shoulder_base + right * (side * 0.18 * s);
    Vec3 const elbow = shoulder + sagittal(arm.flexion, arm.abduction, side) * (0.30 * s);
    Vec3 const hand = elbow + sagittal(arm.flexion + arm.elbow, arm.abduction, side) * (0.27 * s) +
                      (r ? p.right_hand_offset : p.left_hand_offset) * s;
    set(r ? JointId::RClavicle : JointId::LClavicle, clavicle);
    set(r ? JointId::RShoulder : JointId::LShoulder, shoulder);
    set(r ? JointId::RForearm : JointId::LForearm, elbow);
    set(r ? JointId::RHand : JointId::LHand, hand);

    LegPose const &leg = r ? p.right_leg : p.left_leg;
    Vec3 const thigh = right * (side * 0.10 * s) + Vec3(0.0, -0.03 * s, 0.0);
    Vec3 const knee = thigh + sagittal(leg.flexion, 0.0, side) * (0.42 * s);
    Vec3 const ankle = knee + sagittal(leg.flexion - leg.knee, 0.0, side) * (0.42 * s) +
                       (r ? p.right_foot_offset : p.left_foot_offset) * s;
    Vec3 const toe = ankle + Vec3(0.12 * s, -0.05 * s, 0.0);
    set(r ? JointId::RThigh : JointId::LThigh, thigh);
    set(r ? JointId::RShin : JointId::LShin, knee);
    set(r ? JointId::RFoot : JointId::LFoot, ankle);
    set(r ? JointId::RToe : JointId::LToe, toe);
    set(r ? JointId::EffectorRToe : JointId::EffectorLToe, toe + Vec3(0.06 * s, 0.0, 0.0));
  }

  // Whole-body rotation about the hip, then placement in the world.
  Eigen::Matrix3d const R = (Eigen::AngleAxisd(p.body_tilt, Vec3::UnitZ()) * Eigen::AngleAxisd(p.body_roll, Vec3::UnitX()))
                              .toRotationMatrix();
  for (int j = 0; j < kJointCount; ++j) {
    Vec3 const local = J.row(j).transpose();
    J.row(j) = (R * local + p.root).transpose();
  }
  // Ground projection of the center of mass.
  auto const com = index_of(JointId::CenterOfMass);
  J.row(index_of(JointId::CenterOfMassGroundProjection)) << J(com, 0), 0.0, J(com, 2);
  return J;
}

// Per-participant body and style parameters, shared by all activities.
struct ParticipantStyle
{
  Body body;
  Vec3 origin = Vec3::Zero();
  double phase = 0.0;
  double period_scale = 1.0;
  std::array<double, 5> speed{};
  std::array<double, 6> jitter{};  // small angle offsets (radians)
};

ParticipantStyle participant_style(SynthSpec const &spec, int participant)
{
  Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(participant), 0));
  ParticipantStyle st;
  st.body.scale = rng.uniform(0.90, 1.10);
  st.origin = Vec3(rng.uniform(-1.0, 1.0), 0.0, rng.uniform(2.0, 4.0));
  st.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  st.period_scale = rng.uniform(0.9, 1.1);
  for (std::size_t c = 0; c < st.speed.size(); ++c) {
    st.speed[c] = rng.uniform(spec.gait_speed[c].lo, spec.gait_speed[c].hi);
  }
  for (auto &j : st.jitter) { j = rng.normal(0.0, deg(3)); }
  return st;
}

Pose stationary_pose(int label, ParticipantStyle const &st)
{
  Pose p;
  auto const &jt = st.jitter;
  switch (label) {
  case 1:  // office chair: reclined, forearms on armrests
    p.root.y() = 0.50;
    p.torso_pitch = deg(-12) + jt[0];
    p.right_leg = p.left_leg = {deg(90) + jt[1], deg(90)};
    p.right_arm = p.left_arm = {deg(15) + jt[2], deg(12), deg(85) + jt[3]};
    break;
  case 2:  // standing, texting with phone at chest
    p.head_bow = deg(30) + jt[0];
    p.torso_pitch = deg(4) + jt[1];
    p.right_arm = p.left_arm = {deg(12) + jt[2], deg(0), deg(105) + jt[3]};
    p.right_hand_offset = Vec3(0.0, 0.0, -0.10);
    p.left_hand_offset = Vec3(0.0, 0.0, 0.10);
    break;
  case 3:  // stool: upright, leaning forward, hands on knees
    p.root.y() = 0.62;
    p.torso_pitch = deg(18) + jt[0];
    p.right_leg = p.left_leg = {deg(80) + jt[1], deg(100)};
    p.right_arm = p.left_arm = {deg(45) + jt[2], deg(5), deg(20) + jt[3]};
    break;
  default:  // lying on a couch, body along the couch
    p.root.y() = 0.45;
    p.body_tilt = deg(90) + jt[0];
    p.body_roll = jt[1];
    p.right_leg = {deg(10) + jt[2], deg(20)};
    p.left_leg = {deg(5) + jt[3], deg(10)};
    p.right_arm = {deg(20), deg(10), deg(40)};
    p.left_arm = {deg(-5), deg(8), deg(10)};
    break;
  }
  return p;
}

Pose dynamic_pose(int label, ParticipantStyle const &st, int t)
{
  // Base gait periods in frames; running is faster.
  double const period = (label == 9 ? 18.0 : label == 8 ? 40.0 : 30.0) * st.period_scale;
  double const phi = 2.0 * std::numbers::pi * t / period + st.phase;
  double const sn = std::sin(phi);
  double const cs = std::cos(phi);
  auto const &jt = st.jitter;

  double hip_amp = deg(25), knee_base = deg(5), knee_amp = deg(30), arm_amp = deg(20);
  Pose p;
  switch (label) {
  case 5:  // walking
    p.torso_pitch = deg(3) + jt[0];
    break;
  case 6:  // walking and texting
    hip_amp = deg(20);
    p.torso_pitch = deg(6) + jt[0];
    p.head_bow = deg(30) + jt[1];
    arm_amp = 0.0;
    p.right_arm = p.left_arm = {deg(12) + jt[2], deg(0), deg(105) + jt[3]};
    p.right_hand_offset = Vec3(0.0, 0.0, -0.10);
    p.left_hand_offset = Vec3(0.0, 0.0, 0.10);
    break;
  case 7:  // carrying a box held low in front
    hip_amp = deg(20);
    p.torso_pitch = deg(-8) + jt[0];
    arm_amp = 0.0;
    p.right_arm = p.left_arm = {deg(25) + jt[2], deg(20), deg(55) + jt[3]};
    break;
  case 8:  // pulling an object: bent forward, arms reaching out
    hip_amp = deg(15);
    knee_base = deg(20);
    p.torso_pitch = deg(30) + jt[0];
    p.head_bow = deg(-15) + jt[1];
    arm_amp = 0.0;
    p.right_arm = p.left_arm = {deg(75) + jt[2], deg(10), deg(5) + jt[3]};
    break;
  default:  // running
    hip_amp = deg(45);
    knee_base = deg(30);
    knee_amp = deg(60);
    arm_amp = deg(35);
    p.torso_pitch = deg(12) + jt[0];
    p.right_arm.elbow = p.left_arm.elbow = deg(90) + jt[3];
    break;
  }

  p.right_leg = {hip_amp * sn + jt[4], knee_base + knee_amp * std::max(0.0, cs)};
  p.left_leg = {-hip_amp * sn + jt[5], knee_base + knee_amp * std::max(0.0, -cs)};
  if (arm_amp > 0.0) {
    p.right_arm.flexion = -arm_amp * sn + jt[2];
    p.left_arm.flexion = arm_amp * sn + jt[2];
  }

  double const speed = st.speed[static_cast<std::size_t>(label - 5)];
  p.root.x() = speed * t;
  p.root.y() = (label == 9 ? 1.0 : 0.93) + (label == 9 ? 0.04 : 0.015) * std::abs(sn);
  return p;
}

Pose depth_fixture_pose(int label, ParticipantStyle const &st)
{
  // Identical sagittal posture for every class; class identity lives in
  // the lateral (z) offsets of hands and feet only.
  Pose p;
  p.torso_pitch = st.jitter[0] * 0.5;
  double const c = static_cast<double>(label - 5);
  p.right_hand_offset = Vec3(0.0, 0.0, 0.045 * c);
  p.left_hand_offset = Vec3(0.0, 0.0, -0.035 * c);
  p.right_foot_offset = Vec3(0.0, 0.0, 0.025 * (label % 3));
  p.left_foot_offset = Vec3(0.0, 0.0, -0.025 * ((label + 1) % 3));
  return p;
}

} // namespace

JointPositions synthetic_template(SynthSpec const &spec, int participant, int label, int t)
{
  ParticipantStyle const st = participant_style(spec, participant);
  Pose p = spec.depth_separated ? depth_fixture_pose(label, st)
           : is_stationary(label) ? stationary_pose(label, st)
                                  : dynamic_pose(label, st, t);
  p.root += st.origin;
  return forward_kinematics(p, st.body);
}

DatasetManifest generate_synthetic(SynthSpec const &spec)
{
  spec.validate();
  DatasetManifest m;
  m.source = {DatasetSource::Kind::Synthetic, spec.seed, Rng::kAlgorithm};
  for (int participant = 1; participant <= spec.n_participants; ++participant) {
    for (int label = 1; label <= kClassCount; ++label) {
      ActivitySequence seq{participant, ActivityClass(label), {}};
      seq.frames.reserve(static_cast<std::size_t>(spec.frames_per_sequence));
      Rng noise(derive_seed(spec.seed, static_cast<std::uint64_t>(participant), static_cast<std::uint64_t>(label)));
      for (int t = 0; t < spec.frames_per_sequence; ++t) {
        SkeletonFrame f;
        f.frame_index = static_cast<std::uint32_t>(t);
        f.positions = synthetic_template(spec, participant, label, t);
        if (spec.noise_sigma > 0.0) {
          for (int j = 0; j < kJointCount; ++j) {
            for (int a = 0; a < 3; ++a) { f.positions(j, a) += noise.normal(0.0, spec.noise_sigma); }
          }
        }
        f.positions = f.positions.unaryExpr([](double v) { return quantize_coordinate(v); });
        seq.frames.push_back(std::move(f));
      }
      m.sequences.push_back(std::move(seq));
    }
  }
  return m;
}

} // namespace har
