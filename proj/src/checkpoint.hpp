#ifndef RPT_CHECKPOINT_HPP_
#define RPT_CHECKPOINT_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "numeric.hpp"

namespace rpt {

// Named-value archive backing the checkpoint file.
//
// File layout:
//   RPTCKPT1\n
//   counter <name> <int64>\n        (any number, any order)
//   text <name> <payload to end of line>\n
//   array <name> <rows> <cols>\n
//   end <total_doubles>\n
//   <total_doubles little-endian float64 values, arrays in manifest order>
//
// Array data is column-major. Names must not contain whitespace.
class Archive {
 public:
  static constexpr const char* kMagic = "RPTCKPT1";

  void put_counter(const std::string& name, std::int64_t value);
  void put_text(const std::string& name, const std::string& value);
  void put_matrix(const std::string& name, const Matrix& value);
  void put_vector(const std::string& name, const Vector& value);
  void put_real(const std::string& name, double value);

  bool has(const std::string& name) const;
  std::int64_t counter(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const Matrix& matrix(const std::string& name) const;
  Vector vector(const std::string& name) const;
  double real(const std::string& name) const;

  void write(const std::string& path) const;
  // Parses the whole file before returning; throws FormatError naming the
  // byte offset of the first problem.
  static Archive read(const std::string& path);

  std::size_t array_count() const { return array_order_.size(); }

 private:
  void claim(const std::string& name);

  std::map<std::string, std::int64_t> counters_;
  std::map<std::string, std::string> texts_;
  std::map<std::string, Matrix> arrays_;
  std::vector<std::string> counter_order_;
  std::vector<std::string> text_order_;
  std::vector<std::string> array_order_;
};

// Helpers for the ParamSet layout: <prefix>/<layer>/w and <prefix>/<layer>/b.
void put_params(Archive& ar, const std::string& prefix, const ParamSet& params);
// Overwrites params in place after checking every shape.
void get_params(const Archive& ar, const std::string& prefix, ParamSet& params);

}  // namespace rpt

#endif  // RPT_CHECKPOINT_HPP_
