#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <future>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace chs {

/// Evaluates fn(0..count-1) on up to hardware_concurrency() threads and
/// returns the results in index order. The first exception thrown by any
/// task is rethrown after all tasks finish.
template <typename Fn>
auto parallel_map(std::size_t count, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::vector<std::future<std::vector<std::pair<std::size_t, R>>>> futures;
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      std::vector<std::pair<std::size_t, R>> out;
      for (std::size_t i = w; i < count; i += workers) out.emplace_back(i, fn(i));
      return out;
    }));
  }
  std::vector<std::optional<R>> slots(count);
  std::exception_ptr error;
  for (auto& f : futures) {
    try {
      for (auto& [i, r] : f.get()) slots[i].emplace(std::move(r));
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> results;
  results.reserve(count);
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

}  // namespace chs
