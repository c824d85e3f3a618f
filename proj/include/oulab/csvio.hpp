#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oulab {

// CSV with a leading header comment carrying config_hash, seed, and artifact
// version; values are printed with round-trippable precision (%.17g).
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns,
              std::uint64_t config_hash, std::uint64_t seed);
    ~CsvWriter();

    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);
    void close();

  private:
    struct Impl;
    Impl* impl_;
};

std::string format_double(double v);

extern const char* const kArtifactVersion;

}  // namespace oulab
