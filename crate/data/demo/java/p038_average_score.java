import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int n = sc.nextInt();
        double[] scores = new double[n];
        double total_score = 0;
        for (int i = 0; i < n; i++) {
            scores[i] = sc.nextDouble();
            total_score += scores[i];
        }
        double mean_score = total_score / n;
        double variance = 0;
        for (double s : scores) {
            variance += (s - mean_score) * (s - mean_score);
        }
        double std_dev = Math.sqrt(variance / n);
        System.out.printf("%.6f %.6f%n", mean_score, std_dev);
    }
}
