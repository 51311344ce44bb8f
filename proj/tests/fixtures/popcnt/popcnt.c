#include <stdio.h>

__attribute__((noinline)) int f(unsigned long x) {
  int res = 0;
  while (x > 0) {
    res += x & 1;
    x >>= 1;
  }
  return res;
}

int main(void) {
  unsigned long x, reps = 0;
  if (scanf("%lu", &x) != 1) return 1;
  if (scanf("%lu", &reps) != 1) reps = 0;
  printf("%d\n", f(x));
  if (reps > 0) {
    unsigned long acc = 0;
    for (unsigned long i = 0; i < reps; ++i) acc += (unsigned long)f(x ^ i);
    printf("%lu\n", acc);
  }
  return 0;
}
