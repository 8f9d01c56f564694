#include "allelo/io.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace allelo::io {

namespace fs = std::filesystem;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_field(fields[i]);
  }
  out_ << "\r\n";
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

void CsvWriter::line(const std::string& text) {
  out_ << text << "\r\n";
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

unsigned char gray_level(SiteState s) {
  switch (s) {
    case SiteState::free: return 255;
    case SiteState::blue: return 0;
    case SiteState::red: return 170;
    case SiteState::frozen: return 85;
  }
  return 255;
}

void write_pgm(const fs::path& path, const Configuration& xi) {
  const Torus& torus = xi.domain().torus();
  const auto& sides = torus.sides();
  int height = 1;
  int width = sides.back();
  std::vector<unsigned char> px;
  if (torus.dim() == 1) {
    for (Site x = 0; x < static_cast<Site>(xi.size()); ++x) px.push_back(gray_level(xi[x]));
  } else {
    height = sides[sides.size() - 2];
    std::vector<int> c(sides.size(), 0);
    if (torus.dim() == 3) c[0] = sides[0] / 2;
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) {
        c[c.size() - 2] = i;
        c[c.size() - 1] = j;
        px.push_back(gray_level(xi[torus.index(c)]));
      }
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "P5\n" << width << ' ' << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Pgm read_pgm(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::string magic;
  Pgm p;
  int maxval = 0;
  f >> magic >> p.width >> p.height >> maxval;
  if (!f || magic != "P5" || maxval != 255 || p.width < 1 || p.height < 1) {
    throw std::runtime_error("not an 8-bit P5 image: " + path.string());
  }
  f.get();
  p.pixels.resize(static_cast<std::size_t>(p.width) * static_cast<std::size_t>(p.height));
  f.read(reinterpret_cast<char*>(p.pixels.data()), static_cast<std::streamsize>(p.pixels.size()));
  if (!f) throw std::runtime_error("truncated image: " + path.string());
  return p;
}

namespace {

struct MdCtxFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256 final failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, MdCtxFree> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (f) {
    f.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  return h.hex();
}

fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  const char* root = std::getenv("ALLELO_OUTPUT_ROOT");
  if (p.is_relative() && root && *root) p = fs::path(root) / p;
  return p;
}

OutputDir::OutputDir(const std::string& path) : root_(resolve_output(path)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) throw std::runtime_error("cannot create output directory " + root_.string());
}

fs::path OutputDir::file(const std::string& name) {
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  return root_ / name;
}

void OutputDir::write_text(const std::string& name, const std::string& text) {
  std::ofstream f(file(name), std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + (root_ / name).string());
}

fs::path OutputDir::write_manifest() {
  std::vector<std::string> names = files_;
  std::sort(names.begin(), names.end());
  std::ostringstream os;
  for (const auto& n : names) os << sha256_file(root_ / n) << "  " << n << '\n';
  const fs::path m = root_ / "manifest.txt";
  std::ofstream f(m, std::ios::binary);
  f << os.str();
  if (!f) throw std::runtime_error("cannot write " + m.string());
  return m;
}

}  // namespace allelo::io
