#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lac/logparse.hpp"

namespace lac {

inline constexpr std::size_t kFeatureWidth = 22;
inline constexpr std::size_t kHourBits = 5;
inline constexpr std::size_t kMinuteBits = 6;
inline constexpr std::size_t kSecondBits = 6;
inline constexpr std::size_t kActivityBits = 5;

struct EventFields {
  int hour = 0;
  int minute = 0;
  int second = 0;
  int activity = 1;

  friend bool operator==(const EventFields&, const EventFields&) = default;
};

/// 22 bits laid out hour|minute|second|activity, each field big-endian.
/// Bit 0 is the most significant hour bit.
class FeatureVector {
 public:
  FeatureVector() = default;
  static FeatureVector from_raw(std::uint32_t raw);

  std::uint32_t raw() const { return raw_; }
  bool bit(std::size_t index) const;
  /// "0100101111000111100010"
  std::string to_string() const;

  friend bool operator==(FeatureVector, FeatureVector) = default;

 private:
  std::uint32_t raw_ = 0;
};

/// Throws DataError if any field is outside its range.
FeatureVector encode_fields(const EventFields& fields);
FeatureVector encode_event(const LogEvent& event);
/// Throws DataError if a decoded field is out of range (minute 60, activity 0...).
EventFields decode_vector(FeatureVector v);

/// Who owns each row of a sequence.
struct RowOrigin {
  std::uint32_t member = 0;  // index into FeatureSequence::members
  Timestamp timestamp;
  SourceKind source = SourceKind::logon;
  std::string raw_id;
};

/// Time-ordered rows of one employee or one interleaved community.
struct FeatureSequence {
  std::string tag;
  std::vector<std::string> members;
  std::vector<FeatureVector> rows;
  std::vector<RowOrigin> provenance;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// kFeatureWidth x T matrix of 0.0 / 1.0, one column per row.
  Eigen::MatrixXd to_matrix() const;
  /// Rows [begin, end).
  FeatureSequence slice(std::size_t begin, std::size_t end) const;
  /// Indices of the rows owned by `employee`.
  std::vector<std::size_t> rows_of(const std::string& employee) const;
};

FeatureSequence build_sequence(const Timeline& timeline);

/// Merges several timelines by (timestamp, employee, source, raw id).
FeatureSequence interleave_community(std::span<const Timeline* const> timelines,
                                     std::string tag = "community");

}  // namespace lac
