#include "r1fm/binary_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "r1fm/errors.hpp"

namespace r1fm {

namespace {

constexpr std::array<char, 4> kMagic = {'R', '1', 'F', 'M'};

struct Header {
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    os.put(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::istream& is) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw InvalidInput("r1fm file: truncated");
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

void write_file(const std::filesystem::path& path, const Header& h, const Matrix& rows) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidInput("cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kBinaryFormatVersion);
  put_le<std::uint64_t>(os, h.m);
  put_le<std::uint64_t>(os, h.n);
  put_le<std::uint64_t>(os, h.seed);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) put_le<double>(os, rows(i, j));
  }
  if (!os) throw InvalidInput("write failed: " + path.string());
}

Matrix read_file(const std::filesystem::path& path, Header& h) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open for reading: " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw InvalidInput("not an R1FM file: " + path.string());
  const auto version = get_le<std::uint32_t>(is);
  if (version != kBinaryFormatVersion) {
    throw InvalidInput("unsupported R1FM version " + std::to_string(version));
  }
  h.m = get_le<std::uint64_t>(is);
  h.n = get_le<std::uint64_t>(is);
  h.seed = get_le<std::uint64_t>(is);
  if (h.m == 0 || h.n == 0 || h.m > (1ULL << 32) || h.n > (1ULL << 32)) {
    throw InvalidInput("R1FM header has implausible dimensions");
  }
  Matrix rows(static_cast<Eigen::Index>(h.m), static_cast<Eigen::Index>(h.n));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = get_le<double>(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw InvalidInput("R1FM file has trailing bytes: " + path.string());
  }
  return rows;
}

}  // namespace

void save_ensemble(const SensingEnsemble& ens, const std::filesystem::path& path) {
  write_file(path,
             Header{static_cast<std::uint64_t>(ens.m()), static_cast<std::uint64_t>(ens.n()),
                    ens.seed},
             ens.vectors);
}

SensingEnsemble load_ensemble(const std::filesystem::path& path) {
  Header h;
  Matrix rows = read_file(path, h);
  return SensingEnsemble::from_rows(std::move(rows), h.seed);
}

void save_measurements(const MeasurementSet& meas, const SensingEnsemble& ens,
                       const std::filesystem::path& path) {
  if (meas.ensemble_fingerprint != ens.fingerprint() || meas.size() != ens.m()) {
    throw InvalidInput("save_measurements: measurements do not belong to this ensemble");
  }
  write_file(path, Header{static_cast<std::uint64_t>(meas.size()), 1, ens.seed}, meas.y);
}

MeasurementSet load_measurements(const std::filesystem::path& path, const SensingEnsemble& ens) {
  Header h;
  Matrix values = read_file(path, h);
  if (h.n != 1 || static_cast<Eigen::Index>(h.m) != ens.m() || h.seed != ens.seed) {
    throw InvalidInput("load_measurements: file does not match the ensemble");
  }
  MeasurementSet out;
  out.y = values.col(0);
  out.ensemble_fingerprint = ens.fingerprint();
  return out;
}

}  // namespace r1fm
