#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maldyn {

/// One monitored API invocation from a sandbox run.
struct Action {
  std::string api_name;
  std::string call_name;
  std::uint64_t call_pid = 0;
  std::int64_t call_time = 0;  // milliseconds
  std::int64_t err_code = 0;
  std::int64_t ret_value = 0;
  std::int64_t status_value = 0;
  std::vector<std::string> api_args;
  std::vector<std::string> ex_info;

  friend bool operator==(const Action&, const Action&) = default;
};

struct BehaviorLog {
  std::string sample_id;
  std::vector<Action> actions;  // document order
  std::string source_path;

  friend bool operator==(const BehaviorLog&, const BehaviorLog&) = default;
};

enum class Label { Benign, Malware, Unknown };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view text);

struct ManifestEntry {
  std::string sample_id;
  std::string path;
  Label label = Label::Unknown;
  std::optional<std::string> family;
  std::optional<int> year;
  bool generated = false;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(std::string_view sample_id) const;
};

/// Parses a canonical sandbox report:
///
///   <report sample_id="...">
///     <action api_name=".." call_name=".." call_pid="N" call_time="ms"
///             err_code="N" ret_value="0x.." status_value="N">
///       <apiArg value=".."/> ... <exInfo value=".."/> ...
///     </action>
///   </report>
///
/// Unknown elements and attributes are ignored. Missing numeric attributes
/// default to 0 and missing lists to empty. Throws Error(MalformedXml) when the
/// document is not well-formed and Error(SchemaViolation) when it has no
/// actions, an action lacks api_name, or a numeric attribute does not parse.
BehaviorLog parse_log(std::string_view xml_bytes);

/// Reads and parses a log file; falls back to `sample_id` when the root carries none.
BehaviorLog load_log(const std::filesystem::path& path, std::string_view sample_id = {});

/// Canonical XML rendering; parse_log(to_xml(log)) == log minus source_path.
std::string to_xml(const BehaviorLog& log);

/// CSV with header `sample_id,path,label,family,year` and an optional trailing
/// `generated` column. Relative paths stay as written; resolve them with
/// resolve_path().
Manifest parse_manifest(std::string_view csv_text);
Manifest load_manifest(const std::filesystem::path& path);
std::string to_csv(const Manifest& manifest);

/// Resolves an entry path relative to the directory holding the manifest.
std::filesystem::path resolve_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

}  // namespace maldyn
