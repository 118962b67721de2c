#pragma once

// Position indices: binary strings locating a constituent in the derived
// tree (0 = left daughter, 1 = right daughter), plus the exhausted marker
// that follows the rightmost position.

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgparse {

class PositionIndex {
 public:
  PositionIndex() = default;
  explicit PositionIndex(std::string digits) : digits_(std::move(digits)) {
    for (char c : digits_)
      if (c != '0' && c != '1') throw std::invalid_argument("position index must be binary: " + digits_);
  }

  static PositionIndex root() { return PositionIndex{}; }
  static PositionIndex exhausted() {
    PositionIndex p;
    p.exhausted_ = true;
    return p;
  }

  /// "-1" is the exhausted marker, anything else a binary string.
  static PositionIndex parse(std::string_view s) {
    if (s == "-1") return exhausted();
    return PositionIndex{std::string(s)};
  }

  bool is_exhausted() const { return exhausted_; }
  const std::string& digits() const { return digits_; }
  std::size_t depth() const { return digits_.size(); }

  PositionIndex child(char bit) const {
    if (exhausted_) throw std::logic_error("child of the exhausted position");
    PositionIndex p = *this;
    p.digits_.push_back(bit);
    return p;
  }

  std::string str() const { return exhausted_ ? "-1" : digits_; }

  bool operator==(const PositionIndex&) const = default;

  /// Lexicographic order; exhausted sorts after every position.
  std::strong_ordering operator<=>(const PositionIndex& o) const {
    if (exhausted_ || o.exhausted_) return exhausted_ <=> o.exhausted_;
    return digits_ <=> o.digits_;
  }

 private:
  std::string digits_;
  bool exhausted_ = false;
};

/// Left-to-right successor: α0β with β ∈ 1* becomes α1; an all-ones index
/// (including the root) becomes exhausted.
inline PositionIndex successor(const PositionIndex& pi) {
  if (pi.is_exhausted()) throw std::logic_error("successor of the exhausted position");
  std::string d = pi.digits();
  while (!d.empty() && d.back() == '1') d.pop_back();
  if (d.empty()) return PositionIndex::exhausted();
  d.back() = '1';
  return PositionIndex{std::move(d)};
}

/// True iff `pos` is `pointer` followed by zero or more 0s.
inline bool corresponds(const PositionIndex& pointer, const PositionIndex& pos) {
  if (pointer.is_exhausted() || pos.is_exhausted()) return false;
  const auto& p = pointer.digits();
  const auto& q = pos.digits();
  if (q.size() < p.size() || q.compare(0, p.size(), p) != 0) return false;
  return q.find_first_not_of('0', p.size()) == std::string::npos;
}

}  // namespace mgparse
