#include "locolab/binary_io.h"

namespace locolab {

namespace {
constexpr std::uint64_t kMaxElements = 1ULL << 32;
}  // namespace

void BinaryWriter::WriteString(const std::string& s) {
  Write<std::uint64_t>(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::WriteVector(const Eigen::VectorXd& v) {
  Write<std::uint64_t>(v.size());
  out_.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinaryWriter::WriteMatrix(const Eigen::MatrixXd& m) {
  Write<std::uint64_t>(m.rows());
  Write<std::uint64_t>(m.cols());
  out_.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void BinaryWriter::WriteDoubles(const std::vector<double>& v) {
  Write<std::uint64_t>(v.size());
  out_.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinaryWriter::WriteInts(const std::vector<int>& v) {
  Write<std::uint64_t>(v.size());
  for (int x : v) Write<std::int64_t>(x);
}

std::uint64_t BinaryReader::ReadSize() {
  const auto n = Read<std::uint64_t>();
  if (n > kMaxElements) throw IoError("implausible element count in file");
  return n;
}

std::string BinaryReader::ReadString() {
  const auto n = ReadSize();
  std::string s(n, '\0');
  in_.read(s.data(), static_cast<std::streamsize>(n));
  if (!in_) throw IoError("unexpected end of binary file");
  return s;
}

Eigen::VectorXd BinaryReader::ReadVector() {
  const auto n = ReadSize();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  in_.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
  if (!in_) throw IoError("unexpected end of binary file");
  return v;
}

Eigen::MatrixXd BinaryReader::ReadMatrix() {
  const auto rows = ReadSize();
  const auto cols = ReadSize();
  if (rows * cols > kMaxElements) throw IoError("implausible matrix size");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  in_.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in_) throw IoError("unexpected end of binary file");
  return m;
}

std::vector<double> BinaryReader::ReadDoubles() {
  const auto n = ReadSize();
  std::vector<double> v(n);
  in_.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
  if (!in_) throw IoError("unexpected end of binary file");
  return v;
}

std::vector<int> BinaryReader::ReadInts() {
  const auto n = ReadSize();
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(Read<std::int64_t>());
  return v;
}

void BinaryReader::Expect(const std::string& expected) {
  const std::string tag = ReadString();
  if (tag != expected) {
    throw IoError("expected section '" + expected + "', found '" + tag + "'");
  }
}

}  // namespace locolab
