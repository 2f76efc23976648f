#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace cdmarl {

// Deterministic number formatting: shortest round-trip form so identical runs
// produce byte-identical files.
std::string fmt_double(double v);

// Minimal CSV emitter. Every file starts with a '#' metadata comment carrying
// the config hash and seed, then a header row.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& metadata_comment,
              const std::vector<std::string>& header);

    void row(const std::vector<std::string>& fields);
    void flush() { out_.flush(); }

  private:
    std::ofstream out_;
    size_t n_cols_;
};

std::string metadata_comment(uint64_t config_hash, uint64_t seed,
                             const std::string& extra = "");

} // namespace cdmarl
