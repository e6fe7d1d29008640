#include "lac/features.hpp"

#include <algorithm>
#include <queue>

#include "lac/error.hpp"

namespace lac {

namespace {

constexpr std::uint32_t kMask = (1u << kFeatureWidth) - 1;
constexpr std::size_t kActivityShift = 0;
constexpr std::size_t kSecondShift = kActivityBits;
constexpr std::size_t kMinuteShift = kSecondShift + kSecondBits;
constexpr std::size_t kHourShift = kMinuteShift + kMinuteBits;

constexpr std::uint32_t field(std::uint32_t raw, std::size_t shift, std::size_t bits) {
  return (raw >> shift) & ((1u << bits) - 1);
}

}  // namespace

FeatureVector FeatureVector::from_raw(std::uint32_t raw) {
  if (raw & ~kMask) throw DataError("feature vector wider than 22 bits");
  FeatureVector v;
  v.raw_ = raw;
  return v;
}

bool FeatureVector::bit(std::size_t index) const {
  return (raw_ >> (kFeatureWidth - 1 - index)) & 1u;
}

std::string FeatureVector::to_string() const {
  std::string s(kFeatureWidth, '0');
  for (std::size_t i = 0; i < kFeatureWidth; ++i) s[i] = bit(i) ? '1' : '0';
  return s;
}

FeatureVector encode_fields(const EventFields& f) {
  if (f.hour < 0 || f.hour > 23 || f.minute < 0 || f.minute > 59 || f.second < 0 ||
      f.second > 59) {
    throw DataError("time of day out of range");
  }
  if (f.activity < ActivityCode::kMin || f.activity > ActivityCode::kMax) {
    throw DataError("activity code " + std::to_string(f.activity) + " outside [1, 21]");
  }
  return FeatureVector::from_raw(static_cast<std::uint32_t>(f.hour) << kHourShift |
                                 static_cast<std::uint32_t>(f.minute) << kMinuteShift |
                                 static_cast<std::uint32_t>(f.second) << kSecondShift |
                                 static_cast<std::uint32_t>(f.activity) << kActivityShift);
}

FeatureVector encode_event(const LogEvent& event) {
  const TimeOfDay t = time_of_day(event.timestamp);
  return encode_fields({t.hour, t.minute, t.second, event.activity.value()});
}

EventFields decode_vector(FeatureVector v) {
  const EventFields f{static_cast<int>(field(v.raw(), kHourShift, kHourBits)),
                      static_cast<int>(field(v.raw(), kMinuteShift, kMinuteBits)),
                      static_cast<int>(field(v.raw(), kSecondShift, kSecondBits)),
                      static_cast<int>(field(v.raw(), kActivityShift, kActivityBits))};
  if (f.hour > 23) throw DataError("decoded hour " + std::to_string(f.hour) + " > 23");
  if (f.minute > 59) throw DataError("decoded minute " + std::to_string(f.minute) + " > 59");
  if (f.second > 59) throw DataError("decoded second " + std::to_string(f.second) + " > 59");
  if (f.activity < ActivityCode::kMin || f.activity > ActivityCode::kMax) {
    throw DataError("decoded activity " + std::to_string(f.activity) + " outside [1, 21]");
  }
  return f;
}

Eigen::MatrixXd FeatureSequence::to_matrix() const {
  Eigen::MatrixXd m(kFeatureWidth, rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t b = 0; b < kFeatureWidth; ++b) {
      m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t)) = rows[t].bit(b) ? 1.0 : 0.0;
    }
  }
  return m;
}

FeatureSequence FeatureSequence::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, rows.size());
  begin = std::min(begin, end);
  FeatureSequence out;
  out.tag = tag;
  out.members = members;
  out.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                  rows.begin() + static_cast<std::ptrdiff_t>(end));
  out.provenance.assign(provenance.begin() + static_cast<std::ptrdiff_t>(begin),
                        provenance.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<std::size_t> FeatureSequence::rows_of(const std::string& employee) const {
  std::vector<std::size_t> out;
  const auto it = std::find(members.begin(), members.end(), employee);
  if (it == members.end()) return out;
  const auto member = static_cast<std::uint32_t>(it - members.begin());
  for (std::size_t t = 0; t < provenance.size(); ++t) {
    if (provenance[t].member == member) out.push_back(t);
  }
  return out;
}

FeatureSequence build_sequence(const Timeline& timeline) {
  const Timeline* one[] = {&timeline};
  return interleave_community(one, timeline.employee);
}

FeatureSequence interleave_community(std::span<const Timeline* const> timelines,
                                     std::string tag) {
  FeatureSequence seq;
  seq.tag = std::move(tag);
  std::size_t total = 0;
  for (const Timeline* t : timelines) {
    seq.members.push_back(t->employee);
    total += t->events.size();
  }
  seq.rows.reserve(total);
  seq.provenance.reserve(total);

  // k-way merge; heap entries are (timeline index, position).
  auto later = [&](const std::pair<std::size_t, std::size_t>& a,
                   const std::pair<std::size_t, std::size_t>& b) {
    const LogEvent& ea = timelines[a.first]->events[a.second];
    const LogEvent& eb = timelines[b.first]->events[b.second];
    if (ea.timestamp != eb.timestamp) return eb.timestamp < ea.timestamp;
    if (ea.employee != eb.employee) return eb.employee < ea.employee;
    if (ea.source != eb.source) return eb.source < ea.source;
    if (ea.raw_id != eb.raw_id) return eb.raw_id < ea.raw_id;
    return b.first < a.first;
  };
  std::priority_queue<std::pair<std::size_t, std::size_t>,
                      std::vector<std::pair<std::size_t, std::size_t>>, decltype(later)>
      heap(later);
  for (std::size_t i = 0; i < timelines.size(); ++i) {
    if (!timelines[i]->events.empty()) heap.emplace(i, 0);
  }
  while (!heap.empty()) {
    const auto [i, pos] = heap.top();
    heap.pop();
    const LogEvent& e = timelines[i]->events[pos];
    seq.rows.push_back(encode_event(e));
    seq.provenance.push_back(
        RowOrigin{static_cast<std::uint32_t>(i), e.timestamp, e.source, e.raw_id});
    if (pos + 1 < timelines[i]->events.size()) heap.emplace(i, pos + 1);
  }
  return seq;
}

}  // namespace lac
