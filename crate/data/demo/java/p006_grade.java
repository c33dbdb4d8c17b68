import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        while (true) {
            int m = sc.nextInt();
            int f = sc.nextInt();
            int r = sc.nextInt();
            if (m == -1 && f == -1 && r == -1) {
                break;
            }
            int total = m + f;
            char grade;
            if (m == -1 || f == -1) {
                grade = 'F';
            } else if (total >= 80) {
                grade = 'A';
            } else if (total >= 65) {
                grade = 'B';
            } else if (total >= 50) {
                grade = 'C';
            } else if (total >= 30) {
                grade = r >= 50 ? 'C' : 'D';
            } else {
                grade = 'F';
            }
            System.out.println(grade);
        }
    }
}
