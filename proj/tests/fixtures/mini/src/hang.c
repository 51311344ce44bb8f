#include <stdio.h>

int main(void) {
  unsigned long x;
  if (scanf("%lu", &x) != 1) return 1;
  while (x != 0) x = x * 2 + 1;
  printf("%lu\n", x);
  return 0;
}
