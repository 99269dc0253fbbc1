#define N 100
int a[N][N];
int main(void) {
  int i, j; long sum=0;
  #pragma omp parallel for collapse(2) private(i,j)
  for (i = 0; i < N; ++i) {
    for (j = 0; j < N; ++j) {
      a[i][j] += 1;
      sum += a[i][j];
    }
  }
  return 0;
}
