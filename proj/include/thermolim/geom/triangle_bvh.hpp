#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "primitives.hpp"
#include "vec3.hpp"

namespace thermolim
{
//---------------------------------------------------------------------------//
/*!
 * Bounding-volume hierarchy over a triangle soup for point-distance queries.
 *
 * Built once by median splits on the widest centroid axis.
 */
class TriangleBvh
{
  public:
    TriangleBvh() = default;

    explicit TriangleBvh(std::vector<Triangle> triangles)
        : triangles_(std::move(triangles))
    {
        if (triangles_.empty())
        {
            return;
        }
        order_.resize(triangles_.size());
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * triangles_.size() / kLeafSize + 1);
        build(0, static_cast<std::uint32_t>(triangles_.size()));
        std::vector<Triangle> sorted;
        sorted.reserve(triangles_.size());
        for (auto i : order_)
        {
            sorted.push_back(triangles_[i]);
        }
        triangles_ = std::move(sorted);
    }

    bool empty() const { return triangles_.empty(); }
    std::size_t size() const { return triangles_.size(); }
    std::vector<Triangle> const& triangles() const { return triangles_; }

    //! Distance from p to the nearest triangle (infinity when empty).
    double distance(Vec3 const& p) const
    {
        double best = std::numeric_limits<double>::infinity();
        search(p, best, -1.0);
        return best;
    }

    //! Whether some triangle lies within distance r of p.
    bool within(Vec3 const& p, double r) const
    {
        double best = std::numeric_limits<double>::infinity();
        return search(p, best, r);
    }

  private:
    static constexpr std::uint32_t kLeafSize = 4;

    struct Node
    {
        Box box;
        std::uint32_t first;  // left child or first triangle
        std::uint32_t count;  // zero for interior nodes
        std::uint32_t right{0};
    };

    std::vector<Triangle> triangles_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;

    static Vec3 centroid(Triangle const& t) { return (t[0] + t[1] + t[2]) / 3.0; }

    std::uint32_t build(std::uint32_t begin, std::uint32_t end)
    {
        Box box = Box::empty_box();
        Box cbox = Box::empty_box();
        for (auto i = begin; i < end; ++i)
        {
            for (auto const& v : triangles_[order_[i]])
            {
                box.expand(v);
            }
            cbox.expand(centroid(triangles_[order_[i]]));
        }
        auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({box, begin, end - begin, 0});
        if (end - begin <= kLeafSize)
        {
            return index;
        }
        Vec3 e = cbox.hi - cbox.lo;
        int axis = (e.x >= e.y && e.x >= e.z) ? 0 : (e.y >= e.z ? 1 : 2);
        auto mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin,
                         order_.begin() + mid,
                         order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             return centroid(triangles_[a])[axis]
                                    < centroid(triangles_[b])[axis];
                         });
        auto left = build(begin, mid);
        auto right = build(mid, end);
        nodes_[index].first = left;
        nodes_[index].right = right;
        nodes_[index].count = 0;
        return index;
    }

    // Returns true as soon as a triangle within `stop` is found (stop >= 0).
    bool search(Vec3 const& p, double& best, double stop) const
    {
        if (nodes_.empty())
        {
            return false;
        }
        std::uint32_t stack[128];
        int top = 0;
        stack[top++] = 0;
        while (top > 0)
        {
            Node const& node = nodes_[stack[--top]];
            double bound = node.box.distance(p);
            if (bound >= best || (stop >= 0 && bound > stop))
            {
                continue;
            }
            if (node.count > 0)
            {
                for (auto i = node.first; i < node.first + node.count; ++i)
                {
                    double d = point_triangle_distance(p, triangles_[i]);
                    best = std::min(best, d);
                    if (stop >= 0 && best <= stop)
                    {
                        return true;
                    }
                }
                continue;
            }
            std::uint32_t left = node.first;
            std::uint32_t right = node.right;
            double dl = nodes_[left].box.distance(p);
            double dr = nodes_[right].box.distance(p);
            if (dl <= dr)
            {
                stack[top++] = right;
                stack[top++] = left;
            }
            else
            {
                stack[top++] = left;
                stack[top++] = right;
            }
        }
        return stop >= 0 && best <= stop;
    }
};

}  // namespace thermolim
