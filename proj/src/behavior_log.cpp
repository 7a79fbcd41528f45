#include "maldyn/behavior_log.hpp"

#include <expat.h>

#include <algorithm>
#include <memory>
#include <sstream>
#include <unordered_set>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"

namespace maldyn {

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Malware: return "malware";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

Label parse_label(std::string_view text) {
  if (text == "benign" || text == "0") return Label::Benign;
  if (text == "malware" || text == "1") return Label::Malware;
  if (text == "unknown" || text.empty()) return Label::Unknown;
  throw Error(ErrorCode::FormatError, "unknown label '" + std::string(text) + "'");
}

const ManifestEntry* Manifest::find(std::string_view sample_id) const {
  for (const auto& e : entries)
    if (e.sample_id == sample_id) return &e;
  return nullptr;
}

namespace {

struct ParserDeleter {
  void operator()(XML_ParserStruct* p) const { XML_ParserFree(p); }
};

// Expat callbacks cannot throw, so schema problems are recorded here and the
// parser is stopped; parse_log raises after XML_Parse returns.
struct ParseState {
  XML_Parser parser = nullptr;
  BehaviorLog log;
  int depth = 0;
  bool in_action = false;
  int action_depth = 0;
  std::optional<Error> failure;

  void fail(ErrorCode code, std::string message) {
    if (failure) return;
    message += " (line " + std::to_string(XML_GetCurrentLineNumber(parser)) + ")";
    failure.emplace(code, message);
    XML_StopParser(parser, XML_FALSE);
  }
};

const char* find_attr(const XML_Char** attrs, std::string_view name) {
  for (int i = 0; attrs[i] != nullptr; i += 2)
    if (name == attrs[i]) return attrs[i + 1];
  return nullptr;
}

template <class T>
bool read_int_attr(ParseState& st, const XML_Char** attrs, std::string_view name, T& out) {
  const char* raw = find_attr(attrs, name);
  if (raw == nullptr) return true;
  try {
    const std::int64_t v = io::parse_int(raw);
    if constexpr (std::is_unsigned_v<T>) {
      if (v < 0) {
        st.fail(ErrorCode::SchemaViolation, std::string(name) + " must be non-negative");
        return false;
      }
    }
    out = static_cast<T>(v);
    return true;
  } catch (const Error&) {
    st.fail(ErrorCode::SchemaViolation, std::string(name) + " is not an integer: '" + raw + "'");
    return false;
  }
}

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto& st = *static_cast<ParseState*>(user);
  ++st.depth;
  const std::string_view element(name);
  if (st.depth == 1) {
    if (element != "report") {
      st.fail(ErrorCode::SchemaViolation, "root element must be <report>, found <" + std::string(element) + ">");
      return;
    }
    if (const char* id = find_attr(attrs, "sample_id")) st.log.sample_id = id;
    return;
  }
  if (st.depth == 2 && element == "action") {
    Action a;
    const char* api = find_attr(attrs, "api_name");
    if (api == nullptr || *api == '\0') {
      st.fail(ErrorCode::SchemaViolation, "action without api_name");
      return;
    }
    a.api_name = api;
    if (const char* cn = find_attr(attrs, "call_name")) a.call_name = cn;
    if (!read_int_attr(st, attrs, "call_pid", a.call_pid) || !read_int_attr(st, attrs, "call_time", a.call_time) ||
        !read_int_attr(st, attrs, "err_code", a.err_code) || !read_int_attr(st, attrs, "ret_value", a.ret_value) ||
        !read_int_attr(st, attrs, "status_value", a.status_value))
      return;
    st.log.actions.push_back(std::move(a));
    st.in_action = true;
    st.action_depth = st.depth;
    return;
  }
  if (st.in_action && st.depth == st.action_depth + 1) {
    const char* value = find_attr(attrs, "value");
    if (element == "apiArg") st.log.actions.back().api_args.emplace_back(value ? value : "");
    else if (element == "exInfo") st.log.actions.back().ex_info.emplace_back(value ? value : "");
  }
}

void on_end(void* user, const XML_Char*) {
  auto& st = *static_cast<ParseState*>(user);
  if (st.in_action && st.depth == st.action_depth) st.in_action = false;
  --st.depth;
}

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out.push_back(c);
    }
  }
}

void append_attr(std::string& out, std::string_view name, std::string_view value) {
  out.push_back(' ');
  out += name;
  out += "=\"";
  append_escaped(out, value);
  out.push_back('"');
}

}  // namespace

BehaviorLog parse_log(std::string_view xml_bytes) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
  if (!parser) throw std::bad_alloc();
  ParseState st;
  st.parser = parser.get();
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);

  const auto status = XML_Parse(parser.get(), xml_bytes.data(), static_cast<int>(xml_bytes.size()), XML_TRUE);
  if (st.failure) throw *st.failure;
  if (status != XML_STATUS_OK) {
    std::ostringstream msg;
    msg << XML_ErrorString(XML_GetErrorCode(parser.get())) << " at line " << XML_GetCurrentLineNumber(parser.get());
    throw Error(ErrorCode::MalformedXml, msg.str());
  }
  if (st.log.actions.empty()) throw Error(ErrorCode::SchemaViolation, "log contains no action elements");
  return std::move(st.log);
}

BehaviorLog load_log(const std::filesystem::path& path, std::string_view sample_id) {
  BehaviorLog log = parse_log(io::read_file(path));
  if (log.sample_id.empty()) log.sample_id = sample_id;
  log.source_path = path.string();
  return log;
}

std::string to_xml(const BehaviorLog& log) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<report";
  append_attr(out, "sample_id", log.sample_id);
  out += ">\n";
  for (const auto& a : log.actions) {
    out += "  <action";
    append_attr(out, "api_name", a.api_name);
    append_attr(out, "call_name", a.call_name);
    append_attr(out, "call_pid", std::to_string(a.call_pid));
    append_attr(out, "call_time", std::to_string(a.call_time));
    append_attr(out, "err_code", std::to_string(a.err_code));
    append_attr(out, "ret_value", std::to_string(a.ret_value));
    append_attr(out, "status_value", std::to_string(a.status_value));
    if (a.api_args.empty() && a.ex_info.empty()) {
      out += "/>\n";
      continue;
    }
    out += ">\n";
    for (const auto& v : a.api_args) {
      out += "    <apiArg";
      append_attr(out, "value", v);
      out += "/>\n";
    }
    for (const auto& v : a.ex_info) {
      out += "    <exInfo";
      append_attr(out, "value", v);
      out += "/>\n";
    }
    out += "  </action>\n";
  }
  out += "</report>\n";
  return out;
}

Manifest parse_manifest(std::string_view csv_text) {
  const auto rows = io::parse_csv(csv_text);
  if (rows.empty()) throw Error(ErrorCode::MissingField, "manifest has no header");
  const std::vector<std::string> required = {"sample_id", "path", "label", "family", "year"};
  const auto& header = rows[0];
  if (header.size() < required.size() ||
      !std::equal(required.begin(), required.end(), header.begin()))
    throw Error(ErrorCode::MissingField, "manifest header must start with sample_id,path,label,family,year");
  const bool has_generated = header.size() > required.size() && header[required.size()] == "generated";

  Manifest m;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "manifest row " + std::to_string(r + 1);
    if (row.size() < required.size()) throw Error(ErrorCode::MissingField, where + " has too few columns");
    ManifestEntry e;
    e.sample_id = row[0];
    e.path = row[1];
    if (e.sample_id.empty()) throw Error(ErrorCode::MissingField, where + " has an empty sample_id");
    if (e.path.empty()) throw Error(ErrorCode::MissingField, where + " has an empty path");
    e.label = parse_label(row[2]);
    if (!row[3].empty()) e.family = row[3];
    if (!row[4].empty()) {
      const std::string& y = row[4];
      if (y.size() != 4 || y.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorCode::FormatError, where + ": year must be a 4-digit integer, got '" + y + "'");
      e.year = std::stoi(y);
    }
    if (has_generated && row.size() > required.size()) e.generated = row[required.size()] == "true";
    if (!seen.insert(e.sample_id).second)
      throw Error(ErrorCode::DuplicateSampleId, "sample_id '" + e.sample_id + "' appears more than once");
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) { return parse_manifest(io::read_file(path)); }

std::string to_csv(const Manifest& manifest) {
  const bool any_generated =
      std::any_of(manifest.entries.begin(), manifest.entries.end(), [](const auto& e) { return e.generated; });
  std::string out = any_generated ? "sample_id,path,label,family,year,generated\n" : "sample_id,path,label,family,year\n";
  for (const auto& e : manifest.entries) {
    out += io::csv_cell(e.sample_id) + "," + io::csv_cell(e.path) + "," + std::string(to_string(e.label)) + "," +
           io::csv_cell(e.family.value_or("")) + "," + (e.year ? std::to_string(*e.year) : "");
    if (any_generated) out += e.generated ? ",true" : ",false";
    out += "\n";
  }
  return out;
}

std::filesystem::path resolve_path(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
  std::filesystem::path p(entry.path);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

}  // namespace maldyn
