#include "lac/activity.hpp"

#include <string>

#include "lac/error.hpp"

namespace lac {

namespace {

struct ActivityInfo {
  std::string_view name;
  SourceKind source;
};

constexpr std::array<ActivityInfo, 21> kActivities = {{
    {"Logoff", SourceKind::logon},
    {"Logon", SourceKind::logon},
    {"Connect", SourceKind::device},
    {"Disconnect", SourceKind::device},
    {"Send", SourceKind::email},
    {"View", SourceKind::email},
    {"File Copy_0_1_0", SourceKind::file},
    {"File Copy_0_1_1", SourceKind::file},
    {"File Copy_1_0_0", SourceKind::file},
    {"File Copy_1_0_1", SourceKind::file},
    {"File Delete_0_1_0", SourceKind::file},
    {"File Delete_0_1_1", SourceKind::file},
    {"File Open_0_0_0", SourceKind::file},
    {"File Open_0_0_1", SourceKind::file},
    {"File Open_0_1_0", SourceKind::file},
    {"File Open_0_1_1", SourceKind::file},
    {"File Write_1_0_0", SourceKind::file},
    {"File Write_1_0_1", SourceKind::file},
    {"WWW Download", SourceKind::http},
    {"WWW Upload", SourceKind::http},
    {"WWW Visit", SourceKind::http},
}};

constexpr std::string_view operation_name(FileOperation op) {
  switch (op) {
    case FileOperation::copy: return "File Copy";
    case FileOperation::remove: return "File Delete";
    case FileOperation::open: return "File Open";
    case FileOperation::write: return "File Write";
  }
  return "";
}

}  // namespace

std::string_view source_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::logon: return "logon";
    case SourceKind::device: return "device";
    case SourceKind::file: return "file";
    case SourceKind::http: return "http";
    case SourceKind::email: return "email";
  }
  return "unknown";
}

std::string_view source_file_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::logon: return "logon.csv";
    case SourceKind::device: return "device.csv";
    case SourceKind::file: return "file.csv";
    case SourceKind::http: return "http.csv";
    case SourceKind::email: return "email.csv";
  }
  return "unknown.csv";
}

std::optional<SourceKind> source_from_name(std::string_view name) {
  for (SourceKind k : kAllSources) {
    if (source_name(k) == name) return k;
  }
  return std::nullopt;
}

ActivityCode::ActivityCode(int code) : value_(code) {
  if (code < kMin || code > kMax) {
    throw DataError("activity code " + std::to_string(code) +
                    " outside [1, 21]");
  }
}

std::optional<ActivityCode> ActivityCode::try_make(int code) {
  if (code < kMin || code > kMax) return std::nullopt;
  return ActivityCode(code, Unchecked{});
}

std::string_view ActivityCode::name() const {
  return kActivities[static_cast<std::size_t>(value_ - 1)].name;
}

SourceKind ActivityCode::source() const {
  return kActivities[static_cast<std::size_t>(value_ - 1)].source;
}

std::optional<ActivityCode> file_activity_code(FileOperation op,
                                               FileFlags flags) {
  std::string name(operation_name(op));
  name += flags.from_removable ? "_1" : "_0";
  name += flags.to_removable ? "_1" : "_0";
  name += flags.decoy ? "_1" : "_0";
  return activity_from_string(SourceKind::file, name);
}

std::optional<ActivityCode> activity_from_string(SourceKind kind,
                                                 std::string_view text) {
  for (std::size_t i = 0; i < kActivities.size(); ++i) {
    if (kActivities[i].source == kind && kActivities[i].name == text) {
      return ActivityCode::try_make(static_cast<int>(i) + 1);
    }
  }
  return std::nullopt;
}

}  // namespace lac
