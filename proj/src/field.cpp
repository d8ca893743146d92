#include "loglo/field.hpp"

#include <sstream>

namespace loglo {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

Field::Field(Index batch, Index channels, Index nx, Index ny, double lx, double ly)
    : values_(Shape{batch, channels, nx, ny}), lx_(lx), ly_(ly) {
  if (batch < 1 || channels < 1 || nx < 1 || ny < 1) {
    throw ShapeError("field dimensions must be positive, got " +
                     shape_string({batch, channels, nx, ny}));
  }
}

Field::Field(RealTensor values, double lx, double ly)
    : values_(std::move(values)), lx_(lx), ly_(ly) {
  if (values_.rank() != 4) {
    throw ShapeError("field needs rank 4 [b, c, nx, ny], got " + shape_string(values_.shape()));
  }
  for (Index d : values_.shape()) {
    if (d < 1) throw ShapeError("field dimensions must be positive");
  }
}

void Field::validate(const char* where) const {
  if (values_.rank() != 4) throw ShapeError(std::string(where) + ": empty field");
  if (nx() < 2 || ny() < 2) {
    throw InvalidInput(std::string(where) + ": grid must be at least 2x2, got " +
                       shape_string(values_.shape()));
  }
  if (!values_.all_finite()) throw InvalidInput(std::string(where) + ": non-finite values");
}

Field Field::selected_batch(Index b) const {
  Field out(1, channels(), nx(), ny(), lx_, ly_);
  const Index n = channels() * nx() * ny();
  out.array() = values_.array().segment(b * n, n);
  return out;
}

bool same_shape(const Field& a, const Field& b) { return a.values().shape() == b.values().shape(); }

void require_same_shape(const Field& a, const Field& b, const char* where) {
  require_same_shape(a.values().shape(), b.values().shape(), where);
}

}  // namespace loglo
