#include "maldyn/synth.hpp"

#include <array>
#include <cstdio>
#include <string>

#include "maldyn/error.hpp"
#include "maldyn/io.hpp"
#include "maldyn/rng.hpp"

namespace maldyn {

namespace {

const std::vector<std::string> kBenignPool = {
    "NtCreateFile", "NtReadFile", "NtClose", "NtQueryInformationFile", "RegOpenKeyExW", "RegQueryValueExW",
    "RegCloseKey", "GetSystemTimeAsFileTime", "LoadLibraryA", "GetProcAddress", "GetModuleHandleW", "CreateWindowExW",
    "GetMessageW", "DispatchMessageW", "NtAllocateVirtualMemory", "NtFreeVirtualMemory", "GetCursorPos",
    "SetWindowTextW",
};

const std::vector<std::string> kMalwarePool = {
    "NtOpenProcess", "NtWriteVirtualMemory", "CreateRemoteThread", "NtProtectVirtualMemory", "RegSetValueExW",
    "InternetOpenA", "InternetConnectA", "HttpSendRequestA", "NtDelayExecution", "IsDebuggerPresent",
    "GetAdaptersInfo", "NtQuerySystemInformation",
};

const std::vector<std::vector<std::string>> kFamilyMotifs = {
    {"FindFirstFileW", "CryptAcquireContextW", "CryptEncrypt", "WriteFile", "MoveFileExW", "DeleteFileW"},
    {"socket", "connect", "send", "recv", "closesocket", "gethostbyname"},
    {"SetWindowsHookExA", "GetAsyncKeyState", "GetForegroundWindow", "GetKeyboardState", "CallNextHookEx"},
    {"OpenSCManagerW", "CreateServiceW", "StartServiceW", "CopyFileW", "RegCreateKeyExW", "ShellExecuteExW"},
    {"VirtualAllocEx", "ReadProcessMemory", "NtUnmapViewOfSection", "SetThreadContext", "ResumeThread"},
    {"CreateToolhelp32Snapshot", "Process32FirstW", "Process32NextW", "TerminateProcess", "OpenProcessToken"},
};

const std::array<const char*, 4> kModules = {"kernel32.dll", "ntdll.dll", "advapi32.dll", "user32.dll"};

std::string pick(const std::vector<std::string>& pool, Rng& rng) { return pool[rng.below(pool.size())]; }

BehaviorLog make_log(const std::string& id, bool malware, std::size_t family, Rng& rng) {
  BehaviorLog log;
  log.sample_id = id;
  const std::size_t length = 40 + rng.below(41);
  const std::size_t n_pids = 1 + rng.below(3);
  std::vector<std::uint64_t> pids;
  for (std::size_t i = 0; i < n_pids; ++i) pids.push_back(1000 + 4 * rng.below(2000));
  const bool reboots = malware && (family == 2 || rng.uniform() < 0.3);
  std::int64_t clock = static_cast<std::int64_t>(rng.below(1000));
  std::size_t pid_index = 0;
  std::size_t motif_pos = 0;
  const auto& motif = malware ? kFamilyMotifs[family] : kFamilyMotifs[0];

  for (std::size_t i = 0; i < length; ++i) {
    if (i > 0 && rng.uniform() < 0.05) pid_index = (pid_index + 1) % n_pids;
    Action a;
    const double r = rng.uniform();
    if (malware) {
      if (r < 0.45) {
        a.api_name = motif[motif_pos];
        motif_pos = (motif_pos + 1) % motif.size();
      } else if (r < 0.75) {
        a.api_name = pick(kMalwarePool, rng);
      } else {
        a.api_name = pick(kBenignPool, rng);
      }
    } else {
      a.api_name = r < 0.97 ? pick(kBenignPool, rng) : pick(kMalwarePool, rng);
    }
    a.call_name = kModules[rng.below(kModules.size())];
    a.call_pid = pids[pid_index];
    clock += 1 + static_cast<std::int64_t>(rng.below(malware ? 40 : 15));
    a.call_time = clock;
    const bool fails = rng.uniform() < (malware ? 0.25 : 0.05);
    a.ret_value = fails ? static_cast<std::int64_t>(0xC0000022) : 0;
    a.err_code = fails ? 5 : 0;
    a.status_value = fails ? 0 : 1;
    if (rng.uniform() < 0.3) a.api_args.push_back("arg" + std::to_string(rng.below(8)));
    if (fails) a.ex_info.push_back(malware && rng.uniform() < 0.5 ? "access_denied" : "not_found");
    log.actions.push_back(std::move(a));
  }
  if (reboots) {
    Action a;
    a.api_name = rng.uniform() < 0.5 ? "ExitWindowsEx" : "InitiateSystemShutdownExW";
    a.call_name = "user32.dll";
    a.call_pid = pids[pid_index];
    a.call_time = clock + 5;
    a.status_value = 1;
    log.actions.push_back(std::move(a));
  }
  return log;
}

int malware_year(std::size_t index, std::size_t count) {
  // 70% over 2009-2015, then 10% for each of 2016, 2017, 2018
  const std::size_t early = count * 7 / 10;
  if (index < early) return 2009 + static_cast<int>(index % 7);
  const std::size_t rest = index - early;
  const std::size_t late = count - early;
  return 2016 + static_cast<int>(std::min<std::size_t>(2, rest * 3 / std::max<std::size_t>(1, late)));
}

}  // namespace

SynthCorpus make_synthetic_corpus(const SynthConfig& config) {
  if (config.families == 0 || config.families > kFamilyMotifs.size())
    throw Error(ErrorCode::InvalidArgument,
                "families must lie in [1, " + std::to_string(kFamilyMotifs.size()) + "]");
  SynthCorpus out;
  Rng rng(config.seed);
  char id[32];
  for (std::size_t i = 0; i < config.n_benign; ++i) {
    std::snprintf(id, sizeof id, "benign-%03zu", i);
    out.logs.push_back(make_log(id, false, 0, rng));
    out.manifest.entries.push_back({id, std::string("logs/") + id + ".xml", Label::Benign, std::nullopt, std::nullopt, false});
  }
  for (std::size_t i = 0; i < config.n_malware; ++i) {
    const std::size_t family = i % config.families;
    std::snprintf(id, sizeof id, "mal-%03zu", i);
    out.logs.push_back(make_log(id, true, family, rng));
    out.manifest.entries.push_back({id, std::string("logs/") + id + ".xml", Label::Malware,
                                    "family" + std::to_string(family), malware_year(i, config.n_malware), false});
  }
  return out;
}

std::filesystem::path write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& out_dir) {
  for (std::size_t i = 0; i < corpus.logs.size(); ++i)
    io::write_file(out_dir / corpus.manifest.entries[i].path, to_xml(corpus.logs[i]));
  const auto manifest_path = out_dir / "manifest.csv";
  io::write_file(manifest_path, to_csv(corpus.manifest));
  return manifest_path;
}

}  // namespace maldyn
