#include "checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace rpt {

namespace {

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') return false;
  }
  return true;
}

void append_le(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

[[noreturn]] void fail_at(std::size_t offset, const std::string& what) {
  throw FormatError("checkpoint format error at byte offset " +
                    std::to_string(offset) + ": " + what);
}

}  // namespace

void Archive::claim(const std::string& name) {
  if (!valid_name(name)) throw UsageError("invalid archive name '" + name + "'");
  if (has(name)) throw UsageError("duplicate archive name '" + name + "'");
}

void Archive::put_counter(const std::string& name, std::int64_t value) {
  claim(name);
  counters_[name] = value;
  counter_order_.push_back(name);
}

void Archive::put_text(const std::string& name, const std::string& value) {
  claim(name);
  if (value.find('\n') != std::string::npos) {
    throw UsageError("archive text '" + name + "' contains a newline");
  }
  texts_[name] = value;
  text_order_.push_back(name);
}

void Archive::put_matrix(const std::string& name, const Matrix& value) {
  claim(name);
  arrays_[name] = value;
  array_order_.push_back(name);
}

void Archive::put_vector(const std::string& name, const Vector& value) {
  put_matrix(name, Matrix(value));
}

void Archive::put_real(const std::string& name, double value) {
  put_matrix(name, Matrix::Constant(1, 1, value));
}

bool Archive::has(const std::string& name) const {
  return counters_.count(name) || texts_.count(name) || arrays_.count(name);
}

std::int64_t Archive::counter(const std::string& name) const {
  auto it = counters_.find(name);
  if (it == counters_.end()) throw FormatError("checkpoint missing counter '" + name + "'");
  return it->second;
}

const std::string& Archive::text(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw FormatError("checkpoint missing text '" + name + "'");
  return it->second;
}

const Matrix& Archive::matrix(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw FormatError("checkpoint missing array '" + name + "'");
  return it->second;
}

Vector Archive::vector(const std::string& name) const {
  const Matrix& m = matrix(name);
  if (m.cols() != 1) throw FormatError("checkpoint array '" + name + "' is not a vector");
  return m.col(0);
}

double Archive::real(const std::string& name) const {
  const Matrix& m = matrix(name);
  if (m.rows() != 1 || m.cols() != 1) {
    throw FormatError("checkpoint array '" + name + "' is not a scalar");
  }
  return m(0, 0);
}

void Archive::write(const std::string& path) const {
  std::string header = std::string(kMagic) + "\n";
  for (const auto& name : counter_order_) {
    header += "counter " + name + " " + std::to_string(counters_.at(name)) + "\n";
  }
  for (const auto& name : text_order_) {
    header += "text " + name + " " + texts_.at(name) + "\n";
  }
  std::size_t total = 0;
  for (const auto& name : array_order_) {
    const Matrix& m = arrays_.at(name);
    header += "array " + name + " " + std::to_string(m.rows()) + " " +
              std::to_string(m.cols()) + "\n";
    total += static_cast<std::size_t>(m.size());
  }
  header += "end " + std::to_string(total) + "\n";

  std::string payload;
  payload.reserve(total * 8);
  for (const auto& name : array_order_) {
    const Matrix& m = arrays_.at(name);
    for (Eigen::Index i = 0; i < m.size(); ++i) append_le(payload, m.data()[i]);
  }

  // Write to a sibling temp file and rename so readers never see a torn file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + tmp);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed writing checkpoint: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot move checkpoint into place: " + path);
  }
}

Archive Archive::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) fail_at(pos, "unterminated manifest line");
    line = bytes.substr(pos, nl - pos);
    const std::size_t start = pos;
    pos = nl + 1;
    return start;
  };

  Archive ar;
  std::string line;
  next_line(line);
  if (line != kMagic) fail_at(0, "missing " + std::string(kMagic) + " tag");

  struct Pending {
    std::string name;
    Eigen::Index rows;
    Eigen::Index cols;
  };
  std::vector<Pending> pending;
  std::size_t declared_total = 0;
  std::size_t summed_total = 0;
  for (;;) {
    const std::size_t at = next_line(line);
    std::istringstream fields(line);
    std::string kind, name;
    fields >> kind;
    if (kind == "end") {
      if (!(fields >> declared_total)) fail_at(at, "bad end record");
      break;
    }
    if (!(fields >> name) || !valid_name(name)) fail_at(at, "bad record name");
    if (ar.has(name)) fail_at(at, "duplicate name '" + name + "'");
    for (const auto& p : pending) {
      if (p.name == name) fail_at(at, "duplicate name '" + name + "'");
    }
    if (kind == "counter") {
      long long v;
      if (!(fields >> v)) fail_at(at, "bad counter value for '" + name + "'");
      ar.put_counter(name, v);
    } else if (kind == "text") {
      const std::size_t prefix = std::string("text ").size() + name.size() + 1;
      ar.put_text(name, line.size() >= prefix ? line.substr(prefix) : "");
    } else if (kind == "array") {
      long long rows, cols;
      if (!(fields >> rows >> cols) || rows < 0 || cols < 0) {
        fail_at(at, "bad array shape for '" + name + "'");
      }
      pending.push_back({name, static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(cols)});
      summed_total += static_cast<std::size_t>(rows * cols);
    } else {
      fail_at(at, "unknown record kind '" + kind + "'");
    }
  }
  if (declared_total != summed_total) {
    fail_at(pos, "end record declares " + std::to_string(declared_total) +
                     " values, arrays need " + std::to_string(summed_total));
  }
  const std::size_t need = declared_total * 8;
  if (bytes.size() - pos < need) {
    fail_at(bytes.size(), "payload truncated: expected " + std::to_string(need) +
                              " bytes after offset " + std::to_string(pos) +
                              ", found " + std::to_string(bytes.size() - pos));
  }
  if (bytes.size() - pos > need) {
    fail_at(pos + need, "trailing bytes after payload");
  }
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
  for (const auto& p : pending) {
    Matrix m(p.rows, p.cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = read_le(data);
      data += 8;
    }
    ar.put_matrix(p.name, m);
  }
  return ar;
}

void put_params(Archive& ar, const std::string& prefix, const ParamSet& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    ar.put_matrix(prefix + "/" + std::to_string(i) + "/w", params[i].weight);
    ar.put_vector(prefix + "/" + std::to_string(i) + "/b", params[i].bias);
  }
}

void get_params(const Archive& ar, const std::string& prefix, ParamSet& params) {
  ParamSet loaded = params;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const std::string base = prefix + "/" + std::to_string(i);
    const Matrix& w = ar.matrix(base + "/w");
    const Vector b = ar.vector(base + "/b");
    if (w.rows() != loaded[i].weight.rows() || w.cols() != loaded[i].weight.cols() ||
        b.size() != loaded[i].bias.size()) {
      throw FormatError("checkpoint shape mismatch for '" + base + "'");
    }
    loaded[i].weight = w;
    loaded[i].bias = b;
  }
  params = std::move(loaded);
}

}  // namespace rpt
