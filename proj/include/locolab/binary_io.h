#ifndef LOCOLAB_BINARY_IO_H_
#define LOCOLAB_BINARY_IO_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "locolab/errors.h"

namespace locolab {

// Little helpers for the versioned binary checkpoint files. Values are stored
// as raw bytes so doubles round-trip exactly.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void Write(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void WriteString(const std::string& s);
  void WriteVector(const Eigen::VectorXd& v);
  void WriteMatrix(const Eigen::MatrixXd& m);
  void WriteDoubles(const std::vector<double>& v);
  void WriteInts(const std::vector<int>& v);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T Read() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw IoError("unexpected end of binary file");
    return value;
  }
  std::string ReadString();
  Eigen::VectorXd ReadVector();
  Eigen::MatrixXd ReadMatrix();
  std::vector<double> ReadDoubles();
  std::vector<int> ReadInts();

  // Reads a tag and throws if it differs from `expected`.
  void Expect(const std::string& expected);

 private:
  std::uint64_t ReadSize();
  std::istream& in_;
};

}  // namespace locolab

#endif  // LOCOLAB_BINARY_IO_H_
