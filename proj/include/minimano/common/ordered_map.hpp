#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace minimano {

// Insertion-ordered string-keyed map. Template sections keep declaration
// order, which also fixes the order of plan waves and canonical output.
template <typename V>
class OrderedMap {
public:
  using value_type = std::pair<std::string, V>;
  using iterator = typename std::vector<value_type>::iterator;
  using const_iterator = typename std::vector<value_type>::const_iterator;

  OrderedMap() = default;
  OrderedMap(std::initializer_list<value_type> init) {
    for (auto& entry : init) insert(entry.first, entry.second);
  }

  // Returns false (and leaves the map untouched) when the key already exists.
  // The value is taken by reference so `insert(x.id, std::move(x))` copies
  // the key before anything is moved.
  template <typename U = V>
  bool insert(std::string key, U&& value) {
    if (contains(key)) return false;
    entries_.emplace_back(std::move(key), V(std::forward<U>(value)));
    return true;
  }

  template <typename U = V>
  void insert_or_assign(std::string key, U&& value) {
    if (auto* existing = find(key)) {
      *existing = V(std::forward<U>(value));
      return;
    }
    entries_.emplace_back(std::move(key), V(std::forward<U>(value)));
  }

  bool erase(std::string_view key) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const value_type& e) { return e.first == key; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
  }

  V* find(std::string_view key) {
    for (auto& entry : entries_)
      if (entry.first == key) return &entry.second;
    return nullptr;
  }
  const V* find(std::string_view key) const {
    for (const auto& entry : entries_)
      if (entry.first == key) return &entry.second;
    return nullptr;
  }

  V& at(std::string_view key) {
    if (auto* v = find(key)) return *v;
    throw std::out_of_range("no key '" + std::string(key) + "'");
  }
  const V& at(std::string_view key) const {
    if (const auto* v = find(key)) return *v;
    throw std::out_of_range("no key '" + std::string(key) + "'");
  }

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  std::size_t index_of(std::string_view key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].first == key) return i;
    return entries_.size();
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& entry : entries_) out.push_back(entry.first);
    return out;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  iterator begin() { return entries_.begin(); }
  iterator end() { return entries_.end(); }
  const_iterator begin() const { return entries_.begin(); }
  const_iterator end() const { return entries_.end(); }

  friend bool operator==(const OrderedMap& a, const OrderedMap& b) {
    return a.entries_ == b.entries_;
  }

private:
  std::vector<value_type> entries_;
};

}  // namespace minimano
