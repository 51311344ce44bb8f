#include <stdio.h>

int main(void) {
  unsigned long n, s = 0;
  if (scanf("%lu", &n) != 1) return 1;
  for (unsigned long i = 1; i <= n; ++i) s += i;
  printf("%lu\n", s);
  return 0;
}
