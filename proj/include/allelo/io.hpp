#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "allelo/lattice.hpp"

namespace allelo::io {

/// RFC-4180 field: quoted when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);

/// CSV file with CRLF record ends.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);
  /// Writes an already formatted comma-separated line.
  void line(const std::string& text);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Gray level of a state: free 255, blue 0, red 170, frozen 85.
unsigned char gray_level(SiteState s);

/// Binary PGM (P5). A planar torus maps to one pixel per site, rows along
/// the first axis; a line is one row; a 3D torus shows its middle slice
/// across the first axis.
void write_pgm(const std::filesystem::path& path, const Configuration& xi);

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> pixels;
};

Pgm read_pgm(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Output directory of one run. Relative paths sit under $ALLELO_OUTPUT_ROOT
/// when it is set.
class OutputDir {
 public:
  explicit OutputDir(const std::string& path);

  const std::filesystem::path& path() const { return root_; }

  /// Path of a new output file, recorded for the manifest.
  std::filesystem::path file(const std::string& name);
  void write_text(const std::string& name, const std::string& text);

  const std::vector<std::string>& files() const { return files_; }

  /// manifest.txt: `sha256  name` for every recorded file, sorted by name.
  std::filesystem::path write_manifest();

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

std::filesystem::path resolve_output(const std::string& path);

}  // namespace allelo::io
