import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int[] face = new int[6];
        for (int i = 0; i < 6; i++) {
            face[i] = sc.nextInt();
        }
        String cmds = sc.next();
        for (int i = 0; i < cmds.length(); i++) {
            char cmd = cmds.charAt(i);
            int tmp = face[0];
            switch (cmd) {
                case 'N':
                    face[0] = face[1];
                    face[1] = face[5];
                    face[5] = face[4];
                    face[4] = tmp;
                    break;
                case 'S':
                    face[0] = face[4];
                    face[4] = face[5];
                    face[5] = face[1];
                    face[1] = tmp;
                    break;
                case 'E':
                    face[0] = face[3];
                    face[3] = face[5];
                    face[5] = face[2];
                    face[2] = tmp;
                    break;
                case 'W':
                    face[0] = face[2];
                    face[2] = face[5];
                    face[5] = face[3];
                    face[3] = tmp;
                    break;
            }
        }
        System.out.println(face[0]);
    }
}
