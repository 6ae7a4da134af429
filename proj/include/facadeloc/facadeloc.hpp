#pragma once

#include "facadeloc/camera/camera.hpp"
#include "facadeloc/core/errors.hpp"
#include "facadeloc/core/format.hpp"
#include "facadeloc/core/io.hpp"
#include "facadeloc/core/rng.hpp"
#include "facadeloc/core/types.hpp"
#include "facadeloc/features/keypoint.hpp"
#include "facadeloc/features/matchset.hpp"
#include "facadeloc/features/orb.hpp"
#include "facadeloc/geo/geo_transform.hpp"
#include "facadeloc/gml/citygml.hpp"
#include "facadeloc/gml/face_filter.hpp"
#include "facadeloc/gml/textured_face.hpp"
#include "facadeloc/image/image.hpp"
#include "facadeloc/metrics/metrics.hpp"
#include "facadeloc/metrics/summary.hpp"
#include "facadeloc/pipeline/config.hpp"
#include "facadeloc/pipeline/evaluate.hpp"
#include "facadeloc/pipeline/manifest.hpp"
#include "facadeloc/pipeline/report.hpp"
#include "facadeloc/pipeline/synth_fixture.hpp"
#include "facadeloc/robust/homography.hpp"
#include "facadeloc/robust/lm_refine.hpp"
#include "facadeloc/robust/p3p.hpp"
#include "facadeloc/robust/pnp.hpp"
#include "facadeloc/robust/ransac.hpp"
#include "facadeloc/synth/scene.hpp"
