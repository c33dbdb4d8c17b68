import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int rows = sc.nextInt();
        int cols = sc.nextInt();
        int[][] grid = new int[rows][cols];
        for (int r = 0; r < rows; r++) {
            for (int c = 0; c < cols; c++) {
                grid[r][c] = sc.nextInt();
            }
        }
        long[][] best = new long[rows][cols];
        for (int r = 0; r < rows; r++) {
            for (int c = 0; c < cols; c++) {
                long up = r > 0 ? best[r - 1][c] : Long.MAX_VALUE;
                long left = c > 0 ? best[r][c - 1] : Long.MAX_VALUE;
                long prev = Math.min(up, left);
                if (prev == Long.MAX_VALUE) {
                    prev = 0;
                }
                best[r][c] = prev + grid[r][c];
            }
        }
        System.out.println(best[rows - 1][cols - 1]);
    }
}
