#ifndef VMA_VMA_HPP_
#define VMA_VMA_HPP_

#include "vma/annotator.hpp"
#include "vma/assignment.hpp"
#include "vma/error.hpp"
#include "vma/geometry.hpp"
#include "vma/log.hpp"
#include "vma/map_json.hpp"
#include "vma/map_types.hpp"
#include "vma/merge.hpp"
#include "vma/metrics.hpp"
#include "vma/pipeline.hpp"
#include "vma/polygon_ops.hpp"
#include "vma/scene_split.hpp"
#include "vma/sparsify.hpp"
#include "vma/spatial.hpp"
#include "vma/synthgen.hpp"
#include "vma/verification.hpp"

#endif  // VMA_VMA_HPP_
