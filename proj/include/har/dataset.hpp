#pragma once

#include "har/skeleton.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace har {

struct DatasetSource
{
  enum class Kind { FileIngest, Synthetic };
  Kind kind = Kind::FileIngest;
  std::uint64_t seed = 0;        // Synthetic only
  std::string algorithm;         // PRNG identifier, Synthetic only
};

struct DatasetManifest
{
  std::vector<ActivitySequence> sequences;
  DatasetSource source;

  std::size_t frame_count() const noexcept;
};

// -------------------------------------------------------------------- CSV
//
// Header `participant,activity,frame` followed by `<Joint>_x,<Joint>_y,<Joint>_z`
// for each joint in canonical order (87 columns). One row per frame, rows
// grouped by sequence. Coordinates are written with 9 significant digits.

inline constexpr std::size_t kCsvColumns = 3 + 3 * kJointCount;

std::string csv_header();

/// Throws har::Error naming the offending line on any schema or validation failure.
DatasetManifest read_dataset(std::filesystem::path const &path);
DatasetManifest parse_dataset(std::istream &in);

void write_dataset(DatasetManifest const &manifest, std::filesystem::path const &path);
void write_dataset(DatasetManifest const &manifest, std::ostream &out);

/// Value as it survives a write/read cycle (9 significant digits).
double quantize_coordinate(double v);

// -------------------------------------------------------------- synthetic
//
struct SpeedRange
{
  double lo = 0.0;  // meters per frame
  double hi = 0.0;
};

struct SynthSpec
{
  int n_participants = 16;
  int frames_per_sequence = 60;
  double noise_sigma = 0.01;  // meters, isotropic per joint and frame
  std::uint64_t seed = 42;
  // Hip speed per dynamic class 5..9, sampled once per participant.
  std::array<SpeedRange, 5> gait_speed = {{
    {0.030, 0.036},  // walking
    {0.038, 0.044},  // walking and texting
    {0.038, 0.044},  // carrying objects
    {0.015, 0.022},  // pulling object
    {0.090, 0.110},  // running
  }};
  // Fixture mode: all classes share one sagittal (x, y) posture and differ
  // only in the depth (z) placement of the limbs.
  bool depth_separated = false;

  void validate() const;  // throws har::Error
};

/// Deterministic in spec.seed. Every sequence passes validate_sequence.
DatasetManifest generate_synthetic(SynthSpec const &spec);

/// Noise-free posture of `label` for participant `participant` at frame `t`,
/// before quantization. Exposed for template-level tests.
JointPositions synthetic_template(SynthSpec const &spec, int participant, int label, int t);

} // namespace har
