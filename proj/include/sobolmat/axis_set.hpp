#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace sobolmat {

/// A subset of the determined input axes (0, ..., ambient-1).
///
/// Axes are stored sorted and unique, so two sets holding the same axes
/// compare equal regardless of construction order.
class AxisSet {
 public:
  AxisSet() = default;
  AxisSet(std::vector<std::size_t> axes, std::size_t ambient);
  AxisSet(std::initializer_list<std::size_t> axes, std::size_t ambient)
      : AxisSet(std::vector<std::size_t>(axes), ambient) {}

  static AxisSet empty(std::size_t ambient) { return AxisSet({}, ambient); }
  static AxisSet full(std::size_t ambient);
  /// The leading axes (0, ..., count-1).
  static AxisSet prefix(std::size_t count, std::size_t ambient);

  /// Parse "0,1,2" (or "" / "-" for the empty set).
  static AxisSet parse(std::string_view text, std::size_t ambient);

  const std::vector<std::size_t>& axes() const { return axes_; }
  std::size_t ambient() const { return ambient_; }
  std::size_t size() const { return axes_.size(); }
  bool empty() const { return axes_.empty(); }
  bool is_full() const { return axes_.size() == ambient_; }
  bool contains(std::size_t axis) const;

  /// Membership mask of length ambient().
  std::vector<bool> mask() const;

  AxisSet complement() const;
  AxisSet with(std::size_t axis) const;
  AxisSet without(std::size_t axis) const;
  AxisSet intersect(const AxisSet& other) const;

  /// Axes joined by '-', "none" for the empty set. Used in file names and CSV.
  std::string label() const;

  friend bool operator==(const AxisSet&, const AxisSet&) = default;
  friend bool operator<(const AxisSet& a, const AxisSet& b) {
    if (a.ambient_ != b.ambient_) return a.ambient_ < b.ambient_;
    return a.axes_ < b.axes_;
  }

 private:
  std::vector<std::size_t> axes_;
  std::size_t ambient_ = 0;
};

}  // namespace sobolmat
