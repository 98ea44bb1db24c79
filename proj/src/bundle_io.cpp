#include "bemkl/bundle_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "bemkl/error.hpp"

namespace bemkl {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'M', 'K', 'L'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

// Row-major regardless of Eigen's storage order.
void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajor buf = m;
  if constexpr (std::endian::native == std::endian::big) {
    for (Eigen::Index k = 0; k < buf.size(); ++k) buf.data()[k] = to_little(buf.data()[k]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("truncated kernel bundle while reading ") + what);
    }
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    bytes(reinterpret_cast<char*>(&v), sizeof v, what);
    return to_little(v);
  }

  double f64(const char* what) {
    double v;
    bytes(reinterpret_cast<char*>(&v), sizeof v, what);
    return to_little(v);
  }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor buf(rows, cols);
    bytes(reinterpret_cast<char*>(buf.data()), static_cast<std::size_t>(buf.size()) * sizeof(double), what);
    if constexpr (std::endian::native == std::endian::big) {
      for (Eigen::Index k = 0; k < buf.size(); ++k) buf.data()[k] = to_little(buf.data()[k]);
    }
    return buf;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  // Bytes left in a seekable stream, or -1 when unknown.
  long long remaining() {
    const auto here = in_.tellg();
    if (here < 0) return -1;
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    in_.seekg(here);
    return end < 0 ? -1 : static_cast<long long>(end - here);
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_bundle(std::ostream& out, const KernelBundle& bundle) {
  if (bundle.count() == 0) throw std::invalid_argument("refusing to save an empty kernel bundle");
  bundle.validate();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kBundleVersion);
  put_u32(out, static_cast<std::uint32_t>(bundle.count()));
  put_u32(out, static_cast<std::uint32_t>(bundle.n_train()));
  put_u32(out, static_cast<std::uint32_t>(bundle.n_test()));
  for (std::size_t m = 0; m < bundle.count(); ++m) {
    const auto& name = bundle.names[m];
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_matrix(out, bundle.train_kernels[m]);
    if (bundle.has_test()) {
      put_matrix(out, bundle.cross_kernels[m]);
      for (Eigen::Index t = 0; t < bundle.test_self[m].size(); ++t) put_f64(out, bundle.test_self[m][t]);
    }
  }
  if (!out) throw FormatError("failed writing kernel bundle");
}

KernelBundle read_bundle(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("not a kernel bundle (bad magic bytes)");
  const auto version = r.u32("version");
  if (version != kBundleVersion) {
    throw FormatError("unsupported kernel bundle version " + std::to_string(version));
  }
  const auto p = r.u32("kernel count");
  const auto n = static_cast<Eigen::Index>(r.u32("train size"));
  const auto nt = static_cast<Eigen::Index>(r.u32("test size"));
  if (p == 0) throw FormatError("kernel bundle declares zero kernels");
  if (n == 0) throw FormatError("kernel bundle declares zero training points");

  const long long left = r.remaining();
  if (left >= 0) {
    const long double floor_bytes =
        static_cast<long double>(p) *
        (4.0L + 8.0L * (static_cast<long double>(n) * n + static_cast<long double>(nt) * n + nt));
    if (floor_bytes > static_cast<long double>(left)) {
      throw FormatError("kernel bundle dimension header inconsistent with payload size");
    }
  }

  KernelBundle bundle;
  for (std::uint32_t m = 0; m < p; ++m) {
    const auto len = r.u32("name length");
    if (len > (1u << 16)) throw FormatError("kernel name length inconsistent with payload");
    std::string name(len, '\0');
    r.bytes(name.data(), len, "kernel name");
    bundle.names.push_back(std::move(name));
    bundle.train_kernels.push_back(r.matrix(n, n, "train block"));
    if (nt > 0) {
      bundle.cross_kernels.push_back(r.matrix(nt, n, "cross block"));
      Eigen::VectorXd self(nt);
      for (Eigen::Index t = 0; t < nt; ++t) self[t] = r.f64("self-similarity vector");
      bundle.test_self.push_back(std::move(self));
    }
  }
  if (!r.at_end()) throw FormatError("kernel bundle payload is longer than its header declares");
  return bundle;
}

void save_bundle(const KernelBundle& bundle, const std::filesystem::path& path) {
  if (bundle.count() == 0) throw std::invalid_argument("refusing to save an empty kernel bundle");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_bundle(out, bundle);
  out.close();
  if (!out) throw FormatError("failed writing " + path.string());
}

KernelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open kernel bundle " + path.string());
  return read_bundle(in);
}

}  // namespace bemkl
