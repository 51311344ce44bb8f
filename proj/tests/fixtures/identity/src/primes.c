#include <stdio.h>

static int is_prime(unsigned n) {
  if (n < 2) return 0;
  for (unsigned d = 2; d * d <= n; ++d)
    if (n % d == 0) return 0;
  return 1;
}

int main(void) {
  unsigned n;
  if (scanf("%u", &n) != 1) return 1;
  unsigned count = 0;
  for (unsigned i = 0; i <= n; ++i) count += is_prime(i);
  printf("%u\n", count);
  return 0;
}
