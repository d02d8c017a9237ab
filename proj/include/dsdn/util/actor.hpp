// Copyright 2026 The dsdn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "dsdn/wire/types.hpp"

namespace dsdn {

/// A single worker thread draining a task mailbox. Tasks run one at a time
/// in post order; timed tasks run no earlier than their deadline and in
/// (deadline, post order) among themselves.
class ActorThread {
 public:
  using Task = std::function<void()>;

  explicit ActorThread(std::string name = {}) : name_(std::move(name)) {
    thread_ = std::thread([this] { run(); });
  }

  ActorThread(const ActorThread&) = delete;
  ActorThread& operator=(const ActorThread&) = delete;

  ~ActorThread() { stop(); }

  /// Returns false once the actor is stopping; the task is dropped.
  bool post(Task task) {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return false;
      ready_.push_back(std::move(task));
    }
    cv_.notify_one();
    return true;
  }

  bool post_at(TimePoint when, Task task) {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return false;
      timed_.push(Timed{when, next_timed_++, std::move(task)});
    }
    cv_.notify_one();
    return true;
  }

  /// Runs `fn` on the actor and waits for its result. Runs inline when
  /// already on the actor thread. Throws std::runtime_error if the actor
  /// stops before running it.
  template <class Fn>
  auto call(Fn&& fn) -> std::invoke_result_t<Fn> {
    using R = std::invoke_result_t<Fn>;
    if (on_actor_thread()) return fn();
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<Fn>(fn));
    auto result = task->get_future();
    if (!post([task] { (*task)(); })) throw std::runtime_error(name_ + ": actor stopped");
    try {
      return result.get();
    } catch (const std::future_error&) {
      throw std::runtime_error(name_ + ": actor stopped");
    }
  }

  /// Discards anything still queued and joins the worker.
  void stop() {
    {
      std::lock_guard lock(mu_);
      if (stopping_ && !thread_.joinable()) return;
      stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable() && !on_actor_thread()) thread_.join();
  }

  /// True when nothing is running and no task is due.
  bool idle() const {
    std::lock_guard lock(mu_);
    return !busy_ && ready_.empty() && (timed_.empty() || timed_.top().when > Clock::now());
  }

  bool on_actor_thread() const { return std::this_thread::get_id() == thread_.get_id(); }

  const std::string& name() const { return name_; }

 private:
  struct Timed {
    TimePoint when;
    uint64_t order;
    Task task;
  };
  struct Later {
    bool operator()(const Timed& a, const Timed& b) const {
      return a.when != b.when ? a.when > b.when : a.order > b.order;
    }
  };

  void run() {
    std::unique_lock lock(mu_);
    for (;;) {
      auto now = Clock::now();
      while (!timed_.empty() && timed_.top().when <= now) {
        // priority_queue::top is const; the task is moved out before pop.
        ready_.push_back(std::move(const_cast<Timed&>(timed_.top()).task));
        timed_.pop();
      }
      if (stopping_) break;
      if (!ready_.empty()) {
        auto task = std::move(ready_.front());
        ready_.pop_front();
        busy_ = true;
        lock.unlock();
        try {
          task();
        } catch (const std::exception& e) {
          std::fprintf(stderr, "[%s] task failed: %s\n", name_.c_str(), e.what());
        }
        lock.lock();
        busy_ = false;
        continue;
      }
      if (timed_.empty()) {
        cv_.wait(lock);
      } else {
        cv_.wait_until(lock, timed_.top().when);
      }
    }
    ready_.clear();
    while (!timed_.empty()) timed_.pop();
  }

  std::string name_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Task> ready_;
  std::priority_queue<Timed, std::vector<Timed>, Later> timed_;
  uint64_t next_timed_ = 0;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread thread_;
};

}  // namespace dsdn
