#include <math.h>
#include <stdio.h>
#include "cdiffmr.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    CdmStatus s_ = (call);                                                 \
    if (s_ != CDM_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, cdm_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  CdmImage *truth = NULL, *recon = NULL;
  CdmFamily *family = NULL;
  CdmMask *mask = NULL;
  CdmRestorer *oracle = NULL;
  uint32_t start = 0, steps = 0;
  double psnr = 0.0;

  CHECK(cdm_phantom(32, 4, 7, 2, &truth));
  CHECK(cdm_family_build(CDM_SCHEDULE_KIND_LOG, 100, 0.01, 32, 0.0, 0, &family));
  CHECK(cdm_family_snapped_mask(family, 4.0, &start, &mask));
  CHECK(cdm_restorer_oracle(truth, &oracle));
  CdmReconOptions opts = cdm_recon_options_default();
  CHECK(cdm_reconstruct(truth, mask, family, oracle, &opts, &recon, &steps));
  CHECK(cdm_psnr(recon, truth, &psnr));

  if (cdm_mask_generate(32, 0.5, 0.1, 0, &mask) == CDM_STATUS_OK || cdm_last_error() == NULL) {
    fprintf(stderr, "invalid acceleration accepted\n");
    return 1;
  }
  printf("version=%s start=%u steps=%u psnr=%.1f\n", cdm_version(), start, steps, psnr);

  cdm_image_free(recon);
  cdm_restorer_free(oracle);
  cdm_mask_free(mask);
  cdm_family_free(family);
  cdm_image_free(truth);
  return steps == start && psnr > 90.0 ? 0 : 1;
}
