#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <string>
#include <vector>

#include "trustflow.hpp"

namespace trustflow::testing {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trustflow-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name = "") const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::vector<AppBundle> concat(std::vector<AppBundle> a, const std::vector<AppBundle>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline AnalysisResult analyze_bundles(const std::vector<AppBundle>& bundles, unsigned jobs = 1) {
  return analyze(bundles, default_catalog(), {jobs, false});
}

inline AnalysisResult analyze_scenario(ScenarioKind kind) { return analyze_bundles(make_scenario(kind)); }

/// All points of one component, as the scan reports them.
inline ComponentPoints scan_component(const Component& comp, const std::string& app_id = "app") {
  AppBundle app;
  app.app_id = app_id;
  return find_ipc_points(app, comp, default_catalog());
}

}  // namespace trustflow::testing
