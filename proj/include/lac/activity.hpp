#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace lac {

/// The five log files. The enumerator order is the tie-break order used when
/// two events of one employee share a timestamp.
enum class SourceKind : std::uint8_t { logon, device, file, http, email };

inline constexpr std::array<SourceKind, 5> kAllSources = {
    SourceKind::email, SourceKind::file, SourceKind::http, SourceKind::device,
    SourceKind::logon};

std::string_view source_name(SourceKind kind);
/// `email.csv`, `file.csv`, ...
std::string_view source_file_name(SourceKind kind);
std::optional<SourceKind> source_from_name(std::string_view name);

/// One of the 21 activity codes (1 = Logoff ... 21 = WWW Visit).
class ActivityCode {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 21;

  /// Throws DataError outside [1, 21].
  explicit ActivityCode(int code);

  static std::optional<ActivityCode> try_make(int code);

  int value() const noexcept { return value_; }
  /// Canonical activity string, e.g. "File Copy_0_1_0".
  std::string_view name() const;
  SourceKind source() const;

  friend bool operator==(ActivityCode, ActivityCode) = default;
  friend auto operator<=>(ActivityCode, ActivityCode) = default;

 private:
  struct Unchecked {};
  ActivityCode(int code, Unchecked) : value_(code) {}
  int value_;
};

namespace activity {
inline constexpr int logoff = 1;
inline constexpr int logon = 2;
inline constexpr int connect = 3;
inline constexpr int disconnect = 4;
inline constexpr int send = 5;
inline constexpr int view = 6;
inline constexpr int www_download = 19;
inline constexpr int www_upload = 20;
inline constexpr int www_visit = 21;
}  // namespace activity

/// Flags carried by file activities as the `_from_to_decoy` suffix.
struct FileFlags {
  bool from_removable = false;
  bool to_removable = false;
  bool decoy = false;
};

enum class FileOperation : std::uint8_t { copy, remove, open, write };

/// Looks up the code of a file activity; nullopt for the combinations that
/// are not part of the taxonomy (e.g. File Copy_0_0_0).
std::optional<ActivityCode> file_activity_code(FileOperation op, FileFlags flags);

/// Exact-match lookup of an activity string for a given file kind. For file
/// rows the string must carry the full suffix ("File Open_0_0_0").
std::optional<ActivityCode> activity_from_string(SourceKind kind,
                                                 std::string_view text);

}  // namespace lac
