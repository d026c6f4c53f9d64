#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace defatc {

/// SHA-256 hex digest; used as the content hash stamped into every
/// output file so results from different configs cannot be mixed up
/// silently.
std::string sha256_hex(const std::string& data);

/// Shortest decimal that round-trips the double exactly.
std::string format_full(double x);

/// CSV file with a leading `# config_hash=<hex>` comment line.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_hash,
            const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
};

}  // namespace defatc
