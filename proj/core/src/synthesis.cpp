// Copyright 2026 The Amodal Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "amodal/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <tuple>

#include "segmentation_json.hpp"

namespace amodal {

std::optional<Placement> parse_placement(std::string_view name) {
  if (name == "uniform_inside" || name == "uniform-inside") return Placement::kUniformInside;
  if (name == "uniform_any" || name == "uniform-any") return Placement::kUniformAny;
  return std::nullopt;
}

std::string_view placement_name(Placement placement) {
  return placement == Placement::kUniformInside ? "uniform_inside" : "uniform_any";
}

void AugmentConfig::check() const {
  if (donors_per_image < 1) throw Error(ErrorCode::kConfigError, "donors_per_image must be >= 1");
  if (!(min_remaining_visible_fraction >= 0.0 && min_remaining_visible_fraction <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "min_remaining_visible_fraction outside [0, 1]");
  }
  if (max_placement_attempts < 1) {
    throw Error(ErrorCode::kConfigError, "max_placement_attempts must be >= 1");
  }
}

void MergeConfig::check() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "merge iou_threshold outside (0, 1]");
  }
}

namespace {

struct Offset {
  int dx;
  int dy;
};

// Samples a donor offset in canvas coordinates of the base image.
Offset place(const Donor& donor, const ImageRecord& base, const AugmentConfig& config, Rng& rng) {
  const BoundingBox box = bounding_box(donor.annotation.amodal);
  // Donor box relative to its own image origin; base image region on canvas.
  const int bx0 = box.x0 - donor.source_canvas_margin.left;
  const int by0 = box.y0 - donor.source_canvas_margin.top;
  const int bx1 = box.x1 - donor.source_canvas_margin.left;
  const int by1 = box.y1 - donor.source_canvas_margin.top;
  long long lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  if (config.placement == Placement::kUniformInside) {
    lo_x = -bx0;
    hi_x = base.width - bx1;
    lo_y = -by0;
    hi_y = base.height - by1;
  } else {
    lo_x = 1 - bx1;
    hi_x = base.width - 1 - bx0;
    lo_y = 1 - by1;
    hi_y = base.height - 1 - by0;
  }
  if (box.is_empty() || lo_x > hi_x || lo_y > hi_y) {
    throw Error(ErrorCode::kNoValidPlacement,
                "donor " + std::to_string(donor.annotation.id) + " does not fit image " +
                    std::to_string(base.id));
  }
  const int shift_x = base.canvas_margin.left - donor.source_canvas_margin.left;
  const int shift_y = base.canvas_margin.top - donor.source_canvas_margin.top;
  for (int attempt = 0; attempt < config.max_placement_attempts; ++attempt) {
    const Offset image_offset{static_cast<int>(rng.range(lo_x, hi_x)),
                              static_cast<int>(rng.range(lo_y, hi_y))};
    const Offset canvas{image_offset.dx + shift_x, image_offset.dy + shift_y};
    // Translate on the full canvas, then require a visible footprint inside
    // the image region.
    const BinaryMask footprint = translate(donor.annotation.visible, canvas.dx, canvas.dy,
                                           base.canvas_height(), base.canvas_width());
    const BoundingBox image_region{base.canvas_margin.left, base.canvas_margin.top,
                                   base.canvas_margin.left + base.width,
                                   base.canvas_margin.top + base.height};
    const BoundingBox fb = bounding_box(footprint);
    const bool lands = !footprint.is_empty() && fb.x1 > image_region.x0 &&
                       fb.x0 < image_region.x1 && fb.y1 > image_region.y0 &&
                       fb.y0 < image_region.y1;
    if (lands) return canvas;
  }
  throw Error(ErrorCode::kNoValidPlacement,
              "no placement for donor " + std::to_string(donor.annotation.id) + " after " +
                  std::to_string(config.max_placement_attempts) + " attempts");
}

}  // namespace

PasteResult paste_augment(const ImageRecord& base, std::span<const Donor> donors,
                          const AugmentConfig& config, Rng& rng) {
  config.check();
  PasteResult result;
  result.image = base;
  ImageRecord& image = result.image;
  long long next_id = 1;
  for (const auto& a : image.annotations) next_id = std::max(next_id, a.id + 1);
  const int h = image.canvas_height();
  const int w = image.canvas_width();

  for (std::size_t z = 0; z < donors.size(); ++z) {
    const Donor& donor = donors[z];
    const Offset offset = place(donor, image, config, rng);
    const BinaryMask footprint = translate(donor.annotation.visible, offset.dx, offset.dy, h, w);

    std::vector<InstanceAnnotation> kept;
    kept.reserve(image.annotations.size() + 1);
    for (auto& a : image.annotations) {
      a.depth_order += 1;
      if (intersection_area(a.visible, footprint) != 0) {
        a.visible = difference(a.visible, footprint);
        a.invisible = difference(a.amodal, a.visible);
      }
      const double visible_fraction =
          static_cast<double>(a.visible.area()) / static_cast<double>(a.amodal.area());
      if (visible_fraction < config.min_remaining_visible_fraction) continue;
      kept.push_back(std::move(a));
    }

    InstanceAnnotation pasted;
    pasted.id = next_id++;
    pasted.image_id = image.id;
    pasted.category_id = donor.annotation.category_id;
    pasted.amodal = translate(donor.annotation.amodal, offset.dx, offset.dy, h, w);
    pasted.visible = footprint;
    BinaryMask hidden = difference(pasted.amodal, pasted.visible);
    if (!hidden.is_empty()) pasted.invisible = std::move(hidden);
    pasted.depth_order = 0;
    pasted.is_crowd = false;
    kept.push_back(std::move(pasted));
    image.annotations = std::move(kept);

    const int image_dx = offset.dx - (image.canvas_margin.left - donor.source_canvas_margin.left);
    const int image_dy = offset.dy - (image.canvas_margin.top - donor.source_canvas_margin.top);
    result.composites.push_back({image.id, donor.annotation.id, donor.source_image_id, image_dx,
                                 image_dy, static_cast<int>(z)});
  }
  return result;
}

namespace {

bool inside_source(const InstanceAnnotation& a, const ImageRecord& image) {
  const BoundingBox b = bounding_box(a.amodal);
  const int x0 = b.x0 - image.canvas_margin.left;
  const int y0 = b.y0 - image.canvas_margin.top;
  const int x1 = b.x1 - image.canvas_margin.left;
  const int y1 = b.y1 - image.canvas_margin.top;
  return x0 > 0 && y0 > 0 && x1 < image.width && y1 < image.height;
}

InstanceAnnotation as_modal(const InstanceAnnotation& a) {
  InstanceAnnotation m = a;
  m.amodal = a.visible;
  m.invisible.reset();
  m.depth_order = 0;
  return m;
}

}  // namespace

SynthesisResult build_augmented(const Dataset& source, const AugmentConfig& config, int n_images,
                                bool modal_source, int threads) {
  config.check();
  if (n_images < 0) throw Error(ErrorCode::kConfigError, "n_images must be non-negative");
  SynthesisResult out;
  out.dataset.categories = source.categories;
  out.dataset.split_name = source.split_name.empty() ? std::string("augmented")
                                                     : source.split_name + "_augmented";
  if (n_images == 0) return out;

  // Per image: source annotations (modalized if needed), and donor pool.
  std::vector<ImageRecord> bases = source.images;
  struct PoolEntry {
    std::size_t image;
    Donor donor;
  };
  std::vector<PoolEntry> pool;
  for (std::size_t i = 0; i < bases.size(); ++i) {
    auto& image = bases[i];
    if (modal_source) {
      for (auto& a : image.annotations) a = as_modal(a);
    }
    for (const auto& a : image.annotations) {
      const Category* cat = source.find_category(a.category_id);
      if (a.is_crowd || a.amodal.is_empty() || (cat != nullptr && cat->is_stuff)) continue;
      if (config.exclude_boundary_objects && !inside_source(a, image)) continue;
      pool.push_back({i, {a, image.id, image.width, image.height, image.canvas_margin}});
    }
  }
  if (bases.empty()) throw Error(ErrorCode::kNoValidPlacement, "source dataset has no images");

  std::vector<PasteResult> produced(static_cast<std::size_t>(n_images));
  auto synthesize = [&](std::size_t k) {
    Rng rng = Rng::stream(config.rng_seed, k);
    const std::size_t base_index = rng.below(bases.size());
    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      if (pool[p].image != base_index) candidates.push_back(p);
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::kNoValidPlacement, "no donor objects outside the base image");
    }
    std::vector<Donor> donors;
    for (int d = 0; d < config.donors_per_image; ++d) {
      donors.push_back(pool[candidates[rng.below(candidates.size())]].donor);
    }
    ImageRecord base = bases[base_index];
    base.id = static_cast<long long>(k) + 1;
    for (auto& a : base.annotations) a.image_id = base.id;
    produced[k] = paste_augment(base, donors, config, rng);
  };

  const std::size_t workers =
      std::min(static_cast<std::size_t>(std::max(threads, 1)), produced.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < produced.size(); ++k) synthesize(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool_threads;
      for (std::size_t t = 0; t < workers; ++t) {
        pool_threads.emplace_back([&, t] {
          try {
            for (std::size_t k = next++; k < produced.size(); k = next++) synthesize(k);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  long long next_id = 1;
  for (auto& r : produced) {
    for (auto& a : r.image.annotations) a.id = next_id++;
    out.dataset.images.push_back(std::move(r.image));
    out.composites.insert(out.composites.end(), r.composites.begin(), r.composites.end());
  }
  return out;
}

SynthesisResult build_modal_aug(const Dataset& modal, const AugmentConfig& config, int n_images,
                                int threads) {
  return build_augmented(modal, config, n_images, /*modal_source=*/true, threads);
}

Dataset pad_dataset_for_amodal(const Dataset& dataset) {
  Dataset out = dataset;
  for (auto& image : out.images) {
    const Margins& m = image.canvas_margin;
    Margins need;
    bool any = false;
    BoundingBox all{};
    for (const auto& a : image.annotations) {
      const BoundingBox b = bounding_box(a.amodal);
      if (b.is_empty()) continue;
      if (!any) {
        all = b;
        any = true;
      } else {
        all = {std::min(all.x0, b.x0), std::min(all.y0, b.y0), std::max(all.x1, b.x1),
               std::max(all.y1, b.y1)};
      }
    }
    if (any) {
      need.left = std::max(0, m.left - all.x0);
      need.top = std::max(0, m.top - all.y0);
      need.right = std::max(0, all.x1 - (m.left + image.width));
      need.bottom = std::max(0, all.y1 - (m.top + image.height));
    }
    const int width = image.width + need.left + need.right;
    const int height = image.height + need.top + need.bottom;
    const int dx = need.left - m.left;
    const int dy = need.top - m.top;
    for (auto& a : image.annotations) {
      a.amodal = translate(a.amodal, dx, dy, height, width);
      a.visible = translate(a.visible, dx, dy, height, width);
      if (a.invisible) a.invisible = translate(*a.invisible, dx, dy, height, width);
    }
    Margins total = image.padding.value_or(Margins{});
    total.left += need.left;
    total.top += need.top;
    total.right += need.right;
    total.bottom += need.bottom;
    image.padding = total;
    image.width = width;
    image.height = height;
    image.canvas_margin = {};
  }
  return out;
}

Dataset merge_categories(const Dataset& amodal, const Dataset& modal, const MergeConfig& config) {
  config.check();
  Dataset out;
  out.categories = modal.categories;
  out.split_name = amodal.split_name;
  for (const auto& image : amodal.images) {
    const ImageRecord* modal_image = modal.find_image(image.id);
    if (modal_image == nullptr) {
      throw Error(ErrorCode::kImageIdMismatch,
                  "amodal image " + std::to_string(image.id) + " not present in modal dataset");
    }
    auto stuff = [](const Dataset& ds, int category_id) {
      const Category* c = ds.find_category(category_id);
      return c != nullptr && c->is_stuff;
    };
    auto eligible = [&](const Dataset& ds, const InstanceAnnotation& a) {
      if (config.drop_crowd && a.is_crowd) return false;
      if (config.drop_stuff && stuff(ds, a.category_id)) return false;
      return true;
    };

    struct Pair {
      double iou;
      std::size_t a;
      std::size_t m;
    };
    std::vector<Pair> pairs;
    const auto& anns = image.annotations;
    const auto& modal_anns = modal_image->annotations;
    for (std::size_t i = 0; i < anns.size(); ++i) {
      if (!eligible(amodal, anns[i])) continue;
      for (std::size_t j = 0; j < modal_anns.size(); ++j) {
        if (!eligible(modal, modal_anns[j])) continue;
        const double v = iou(anns[i].visible, modal_anns[j].visible);
        if (v > config.iou_threshold) pairs.push_back({v, i, j});
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& x, const Pair& y) { return x.iou > y.iou; });
    std::vector<int> assigned(anns.size(), -1);
    std::vector<bool> used(modal_anns.size(), false);
    for (const auto& p : pairs) {
      if (assigned[p.a] >= 0 || used[p.m]) continue;
      assigned[p.a] = modal_anns[p.m].category_id;
      used[p.m] = true;
    }
    ImageRecord merged = image;
    merged.annotations.clear();
    for (std::size_t i = 0; i < anns.size(); ++i) {
      if (assigned[i] < 0) continue;
      InstanceAnnotation a = anns[i];
      a.category_id = assigned[i];
      merged.annotations.push_back(std::move(a));
    }
    out.images.push_back(std::move(merged));
  }
  return out;
}

std::string composites_json(std::span<const CompositeEntry> composites) {
  detail::OrderedJson arr = detail::OrderedJson::array();
  for (const auto& c : composites) {
    detail::OrderedJson j;
    j["output_image_id"] = c.output_image_id;
    j["donor_annotation_id"] = c.donor_annotation_id;
    j["donor_source_image"] = c.donor_source_image;
    j["dx"] = c.dx;
    j["dy"] = c.dy;
    j["z"] = c.z;
    arr.push_back(std::move(j));
  }
  std::string text = "[";
  for (std::size_t i = 0; i < arr.size(); ++i) text += (i == 0 ? "\n  " : ",\n  ") + arr[i].dump();
  text += arr.empty() ? "]\n" : "\n]\n";
  return text;
}

}  // namespace amodal
