#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ulearn {

/// Thrown by parallel_for when a task fails; carries the failing task index.
class TaskFailure : public std::exception {
 public:
  TaskFailure(std::size_t index, std::exception_ptr inner)
      : index_(index), inner_(std::move(inner)) {}
  std::size_t index() const { return index_; }
  const std::exception_ptr& inner() const { return inner_; }
  const char* what() const noexcept override { return "parallel task failed"; }

 private:
  std::size_t index_;
  std::exception_ptr inner_;
};

/// Runs task(i) for i in [0, count) on up to `workers` threads. Tasks must
/// write only to slots owned by their index. If any task throws, the failure
/// with the smallest index is rethrown as TaskFailure once all threads join,
/// so the reported error does not depend on scheduling.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;

  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };

  if (threads == 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  }
  if (failure) throw TaskFailure(failed_index, failure);
}

}  // namespace ulearn
