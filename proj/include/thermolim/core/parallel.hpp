#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace thermolim
{
//---------------------------------------------------------------------------//
// Deterministic sharded execution.
//
// Work is always split into a fixed number of shards whose results are
// combined in shard order. The worker count only changes which thread runs a
// shard, never the arithmetic, so results are identical for any thread count.
//---------------------------------------------------------------------------//

inline constexpr std::size_t kDefaultShards = 64;

namespace detail
{
inline std::atomic<unsigned>& thread_setting()
{
    static std::atomic<unsigned> threads{1};
    return threads;
}

//! True on a pool worker; nested calls then run inline.
inline bool& in_worker()
{
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

//! Set the worker cap; zero means hardware concurrency.
inline void set_thread_count(unsigned n)
{
    if (n == 0)
    {
        n = std::max(1u, std::thread::hardware_concurrency());
    }
    detail::thread_setting().store(n);
}

inline unsigned thread_count()
{
    return detail::thread_setting().load();
}

struct ShardRange
{
    std::size_t begin;
    std::size_t end;
};

//! Contiguous split of [0, n) into `shards` nearly equal ranges.
inline ShardRange shard_range(std::size_t n, std::size_t shards, std::size_t k)
{
    return {n * k / shards, n * (k + 1) / shards};
}

//! Run `fn(shard)` for every shard and return the results in shard order.
template<class R, class F>
std::vector<R> map_shards(std::size_t shards, F&& fn)
{
    std::vector<R> results(shards);
    unsigned workers
        = static_cast<unsigned>(std::min<std::size_t>(thread_count(), shards));
    if (workers <= 1 || detail::in_worker())
    {
        for (std::size_t k = 0; k < shards; ++k)
        {
            results[k] = fn(k);
        }
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        detail::in_worker() = true;
        for (std::size_t k = next++; k < shards; k = next++)
        {
            try
            {
                results[k] = fn(k);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
    {
        pool.emplace_back(worker);
    }
    for (auto& t : pool)
    {
        t.join();
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }
    return results;
}

//! Pairwise reduction with a topology fixed by the input length.
template<class T, class Op>
T tree_reduce(std::vector<T> values, Op op)
{
    if (values.empty())
    {
        return T{};
    }
    while (values.size() > 1)
    {
        std::vector<T> next;
        next.reserve((values.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < values.size(); i += 2)
        {
            next.push_back(op(values[i], values[i + 1]));
        }
        if (values.size() % 2 == 1)
        {
            next.push_back(std::move(values.back()));
        }
        values = std::move(next);
    }
    return std::move(values.front());
}

//! Running mean and squared deviations (Chan et al. merge); order fixed.
struct Moments
{
    double count{0};
    double mean_{0};
    double m2{0};

    void add(double x)
    {
        count += 1;
        double d = x - mean_;
        mean_ += d / count;
        m2 += d * (x - mean_);
    }

    friend Moments operator+(Moments const& a, Moments const& b)
    {
        if (a.count == 0)
        {
            return b;
        }
        if (b.count == 0)
        {
            return a;
        }
        Moments r;
        r.count = a.count + b.count;
        double d = b.mean_ - a.mean_;
        r.mean_ = a.mean_ + d * (b.count / r.count);
        r.m2 = a.m2 + b.m2 + d * d * (a.count * b.count / r.count);
        return r;
    }

    double mean() const { return mean_; }
    double sum() const { return mean_ * count; }

    //! Unbiased sample variance.
    double variance() const { return count < 2 ? 0.0 : m2 / (count - 1); }

    //! Standard error of the mean.
    double stderr_of_mean() const
    {
        return count > 0 ? std::sqrt(variance() / count) : 0.0;
    }
};

//! Accumulate `sample(i)` over [0, n) with sharded, order-fixed reduction.
template<class F>
Moments sharded_moments(std::size_t n, F&& sample)
{
    std::size_t shards = std::min<std::size_t>(kDefaultShards, std::max<std::size_t>(n, 1));
    auto parts = map_shards<Moments>(shards, [&](std::size_t k) {
        Moments m;
        auto r = shard_range(n, shards, k);
        for (std::size_t i = r.begin; i < r.end; ++i)
        {
            m.add(sample(i));
        }
        return m;
    });
    return tree_reduce(std::move(parts), std::plus<>{});
}

//! Count indices in [0, n) satisfying `pred(i)`; exact and order free.
template<class F>
std::size_t sharded_count(std::size_t n, F&& pred)
{
    std::size_t shards = std::min<std::size_t>(kDefaultShards, std::max<std::size_t>(n, 1));
    auto parts = map_shards<std::size_t>(shards, [&](std::size_t k) {
        std::size_t c = 0;
        auto r = shard_range(n, shards, k);
        for (std::size_t i = r.begin; i < r.end; ++i)
        {
            c += pred(i) ? 1 : 0;
        }
        return c;
    });
    std::size_t total = 0;
    for (auto c : parts)
    {
        total += c;
    }
    return total;
}

}  // namespace thermolim
