#include "sobolmat/axis_set.hpp"

#include <algorithm>
#include <charconv>

#include "sobolmat/errors.hpp"

namespace sobolmat {

AxisSet::AxisSet(std::vector<std::size_t> axes, std::size_t ambient)
    : axes_(std::move(axes)), ambient_(ambient) {
  std::sort(axes_.begin(), axes_.end());
  if (std::adjacent_find(axes_.begin(), axes_.end()) != axes_.end())
    throw DomainError("axis set contains a repeated axis");
  if (!axes_.empty() && axes_.back() >= ambient_)
    throw DomainError("axis " + std::to_string(axes_.back()) +
                      " out of range for M=" + std::to_string(ambient_));
}

AxisSet AxisSet::full(std::size_t ambient) { return prefix(ambient, ambient); }

AxisSet AxisSet::prefix(std::size_t count, std::size_t ambient) {
  if (count > ambient) throw DomainError("prefix longer than ambient dimension");
  std::vector<std::size_t> axes(count);
  for (std::size_t i = 0; i < count; ++i) axes[i] = i;
  return AxisSet(std::move(axes), ambient);
}

AxisSet AxisSet::parse(std::string_view text, std::size_t ambient) {
  std::vector<std::size_t> axes;
  if (text.empty() || text == "-" || text == "none") return AxisSet(axes, ambient);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find_first_of(",-", pos);
    if (end == std::string_view::npos) end = text.size();
    auto token = text.substr(pos, end - pos);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
      throw DomainError("bad axis list '" + std::string(text) + "'");
    axes.push_back(value);
    pos = end + 1;
  }
  return AxisSet(std::move(axes), ambient);
}

bool AxisSet::contains(std::size_t axis) const {
  return std::binary_search(axes_.begin(), axes_.end(), axis);
}

std::vector<bool> AxisSet::mask() const {
  std::vector<bool> m(ambient_, false);
  for (auto a : axes_) m[a] = true;
  return m;
}

AxisSet AxisSet::complement() const {
  std::vector<std::size_t> rest;
  rest.reserve(ambient_ - axes_.size());
  for (std::size_t i = 0; i < ambient_; ++i)
    if (!contains(i)) rest.push_back(i);
  return AxisSet(std::move(rest), ambient_);
}

AxisSet AxisSet::with(std::size_t axis) const {
  if (contains(axis)) return *this;
  auto axes = axes_;
  axes.push_back(axis);
  return AxisSet(std::move(axes), ambient_);
}

AxisSet AxisSet::without(std::size_t axis) const {
  auto axes = axes_;
  axes.erase(std::remove(axes.begin(), axes.end(), axis), axes.end());
  return AxisSet(std::move(axes), ambient_);
}

AxisSet AxisSet::intersect(const AxisSet& other) const {
  std::vector<std::size_t> both;
  std::set_intersection(axes_.begin(), axes_.end(), other.axes_.begin(),
                        other.axes_.end(), std::back_inserter(both));
  return AxisSet(std::move(both), ambient_);
}

std::string AxisSet::label() const {
  if (axes_.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(axes_[i]);
  }
  return out;
}

}  // namespace sobolmat
